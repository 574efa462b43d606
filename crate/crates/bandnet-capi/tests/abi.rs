//! Drives the exported C functions the way a foreign binding would:
//! through raw pointers and status codes only.

use std::ffi::{c_char, CString};
use std::path::Path;
use std::ptr;

use bandnet::mlp::{self, MlpConfig, TrainConfig};
use bandnet::raster::{self, BandGrid, BandId, Scene};
use bandnet::sampling::{Dataset, SamplePoint};

use bandnet_capi::*;

fn last_error() -> String {
    unsafe {
        let needed = bn_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; needed + 1];
        bn_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len());
        buf.truncate(needed);
        String::from_utf8(buf).unwrap()
    }
}

/// Two-band scene, left half water-like in B11; SCL marks one no-data pixel.
fn write_scene(dir: &Path) {
    let (w, h) = (20usize, 10usize);
    let value = |x: usize, water_code: u16, land_code: u16| {
        if x < w / 2 {
            water_code
        } else {
            land_code
        }
    };
    let b11: Vec<u16> = (0..w * h).map(|i| value(i % w, 300, 3500)).collect();
    let b4: Vec<u16> = (0..w * h).map(|i| value(i % w, 1500, 2000)).collect();
    let mut scl = vec![6u16; w * h];
    for (i, code) in scl.iter_mut().enumerate() {
        if i % w >= w / 2 {
            *code = 4;
        }
    }
    scl[3] = 0; // no-data pixel at (3, 0)
    let scene = Scene::new(
        "CAPI",
        "2022-03-01",
        vec![
            BandGrid::new(BandId::B11, w, h, 10, b11).unwrap(),
            BandGrid::new(BandId::B4, w, h, 10, b4).unwrap(),
        ],
        Some(BandGrid::new(BandId::Scl, w, h, 10, scl).unwrap()),
        None,
    )
    .unwrap();
    raster::save_scene(&scene, dir).unwrap();
}

/// Trains a one-band model just far enough to separate 0.03 from 0.35.
fn write_model(path: &Path) {
    let point = |v: f64, label: u8| SamplePoint {
        features: vec![v],
        label,
        tile: "CAPI".to_string(),
        x: 0,
        y: 0,
    };
    let make = |n: usize| -> Vec<SamplePoint> {
        (0..n)
            .flat_map(|i| {
                let jitter = (i % 7) as f64 * 0.004;
                [point(0.02 + jitter, 1), point(0.33 + jitter, 0)]
            })
            .collect()
    };
    let dataset = Dataset {
        train: make(300),
        val: make(40),
        test: Vec::new(),
    };
    let mut tc = TrainConfig::new(12);
    tc.max_epochs = 40;
    let (params, _) = mlp::train(&dataset, &MlpConfig::new(1), &tc).unwrap();
    mlp::save_params(&params, path).unwrap();
}

#[test]
fn full_inference_flow_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let scene_dir = dir.path().join("scene");
    std::fs::create_dir_all(&scene_dir).unwrap();
    write_scene(&scene_dir);
    let weights = dir.path().join("model.bnet");
    write_model(&weights);

    unsafe {
        let version = bn_version();
        assert!(!version.is_null());
        assert_eq!(
            std::ffi::CStr::from_ptr(version).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );

        let c_scene_dir = CString::new(scene_dir.to_str().unwrap()).unwrap();
        let mut scene: *mut BnScene = ptr::null_mut();
        assert_eq!(
            bn_scene_load(c_scene_dir.as_ptr(), &mut scene),
            BnStatus::Ok
        );
        assert_eq!(bn_scene_width(scene), 20);
        assert_eq!(bn_scene_height(scene), 10);
        assert_eq!(bn_scene_band_count(scene), 2);
        let b11 = CString::new("B11").unwrap();
        let b8 = CString::new("B8").unwrap();
        assert!(bn_scene_has_band(scene, b11.as_ptr()));
        assert!(!bn_scene_has_band(scene, b8.as_ptr()));

        let c_weights = CString::new(weights.to_str().unwrap()).unwrap();
        let mut model: *mut BnModel = ptr::null_mut();
        assert_eq!(bn_model_load(c_weights.as_ptr(), &mut model), BnStatus::Ok);
        assert_eq!(bn_model_input_dim(model), 1);

        let bands = [b11.as_ptr()];
        let mut mask: *mut BnMask = ptr::null_mut();
        assert_eq!(
            bn_predict_map(model, scene, bands.as_ptr(), 1, 0.5, &mut mask),
            BnStatus::Ok
        );
        assert_eq!(bn_mask_width(mask), 20);
        assert_eq!(bn_mask_height(mask), 10);
        // Left half water (100 pixels) minus the one no-data pixel.
        assert_eq!(bn_mask_count_water(mask), 99);
        let data = bn_mask_data(mask);
        assert!(!data.is_null());
        let labels = std::slice::from_raw_parts(data, 200);
        assert_eq!(labels[0], 1);
        assert_eq!(labels[3], 255);
        assert_eq!(labels[19], 0);

        // xor with itself: nothing changed, invalid pixel stays invalid.
        let mut diff: *mut BnMask = ptr::null_mut();
        assert_eq!(bn_mask_xor(mask, mask, &mut diff), BnStatus::Ok);
        assert_eq!(bn_mask_count_water(diff), 0);

        let pgm = dir.path().join("mask.pgm");
        let c_pgm = CString::new(pgm.to_str().unwrap()).unwrap();
        assert_eq!(bn_mask_save_pgm(mask, c_pgm.as_ptr()), BnStatus::Ok);
        let reloaded = raster::load_mask_pgm(&pgm).unwrap();
        assert_eq!(reloaded.count_water(), 99);

        bn_mask_free(diff);
        bn_mask_free(mask);
        bn_model_free(model);
        bn_scene_free(scene);
    }
}

#[test]
fn error_paths_set_status_and_message() {
    unsafe {
        // NULL arguments.
        let mut scene: *mut BnScene = ptr::null_mut();
        assert_eq!(
            bn_scene_load(ptr::null(), &mut scene),
            BnStatus::NullArgument
        );
        assert!(last_error().contains("dir"));
        let c = CString::new("x").unwrap();
        assert_eq!(
            bn_scene_load(c.as_ptr(), ptr::null_mut()),
            BnStatus::NullArgument
        );

        // Missing path surfaces as a failed load with a message.
        let missing = CString::new("/nonexistent/scene/dir").unwrap();
        let status = bn_scene_load(missing.as_ptr(), &mut scene);
        assert_ne!(status, BnStatus::Ok);
        assert!(scene.is_null());
        assert!(!last_error().is_empty());

        // Invalid UTF-8 path.
        let bad = CString::new([0x66u8, 0xff, 0xfe].as_slice()).unwrap();
        assert_eq!(bn_scene_load(bad.as_ptr(), &mut scene), BnStatus::Utf8);

        // A weight file that is not a weight file.
        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.bnet");
        std::fs::write(&junk, b"definitely not weights").unwrap();
        let c_junk = CString::new(junk.to_str().unwrap()).unwrap();
        let mut model: *mut BnModel = ptr::null_mut();
        assert_eq!(bn_model_load(c_junk.as_ptr(), &mut model), BnStatus::Format);
        assert!(model.is_null());

        // Accessors tolerate NULL.
        assert_eq!(bn_scene_width(ptr::null()), 0);
        assert_eq!(bn_mask_data(ptr::null()), ptr::null());
        assert_eq!(bn_model_input_dim(ptr::null()), 0);
        bn_scene_free(ptr::null_mut());
        bn_model_free(ptr::null_mut());
        bn_mask_free(ptr::null_mut());
    }
}

#[test]
fn threshold_validation_crosses_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let scene_dir = dir.path().join("scene");
    std::fs::create_dir_all(&scene_dir).unwrap();
    write_scene(&scene_dir);
    let weights = dir.path().join("model.bnet");
    write_model(&weights);

    unsafe {
        let c_dir = CString::new(scene_dir.to_str().unwrap()).unwrap();
        let mut scene: *mut BnScene = ptr::null_mut();
        bn_scene_load(c_dir.as_ptr(), &mut scene);
        let c_weights = CString::new(weights.to_str().unwrap()).unwrap();
        let mut model: *mut BnModel = ptr::null_mut();
        bn_model_load(c_weights.as_ptr(), &mut model);

        let b11 = CString::new("B11").unwrap();
        let bands = [b11.as_ptr()];
        let mut mask: *mut BnMask = ptr::null_mut();
        assert_eq!(
            bn_predict_map(model, scene, bands.as_ptr(), 1, 1.0, &mut mask),
            BnStatus::InvalidArgument
        );
        assert!(mask.is_null());
        assert!(last_error().contains("threshold"));

        // Wrong band count for the model.
        let b4 = CString::new("B4").unwrap();
        let two = [b11.as_ptr(), b4.as_ptr()];
        assert_eq!(
            bn_predict_map(model, scene, two.as_ptr(), 2, 0.5, &mut mask),
            BnStatus::InvalidArgument
        );

        bn_model_free(model);
        bn_scene_free(scene);
    }
}

#[test]
fn generated_header_declares_the_surface() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bandnet.h"))
            .expect("build script generates include/bandnet.h");
    for needle in [
        "BANDNET_H",
        "typedef struct BnScene BnScene;",
        "typedef struct BnModel BnModel;",
        "typedef struct BnMask BnMask;",
        "BN_STATUS_OK",
        "BN_STATUS_NULL_ARGUMENT",
        "bn_scene_load",
        "bn_predict_map",
        "bn_mask_data",
        "bn_last_error_message",
        "bn_version",
    ] {
        assert!(header.contains(needle), "header lacks `{needle}`");
    }
}
