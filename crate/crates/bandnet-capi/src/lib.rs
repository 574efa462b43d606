//! C ABI over the water-segmentation library.
//!
//! Handles are opaque pointers created and destroyed here; never free them
//! with `free()`. Functions returning [`BnStatus`] report failures through
//! the return value, and a per-thread message retrievable with
//! [`bn_last_error_message`] carries the details. Handle accessors
//! (widths, counts, data pointers) return zero/NULL on NULL input instead.
//!
//! The generated header lands in `include/bandnet.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bandnet::mlp::{self, MlpParams};
use bandnet::raster::{self, BandId, Scene, WaterMask};
use bandnet::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An argument value violates a precondition.
    InvalidArgument = 2,
    /// The operating system reported an I/O failure.
    Io = 3,
    /// A file is not in the expected format or is internally inconsistent.
    Format = 4,
    /// The data is unusable (wrong class balance, non-finite values, ...).
    Data = 5,
    /// A string argument is not valid UTF-8.
    Utf8 = 6,
    /// An internal invariant failed; the library state is still sound.
    Panic = 7,
}

/// Opaque handle to a loaded scene.
pub struct BnScene(Scene);

/// Opaque handle to trained segmentation-network weights.
pub struct BnModel(MlpParams);

/// Opaque handle to a segmentation mask
/// (labels: 0 non-water, 1 water, 255 invalid).
pub struct BnMask(WaterMask);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl AsRef<str>) {
    let clean: Vec<u8> = msg
        .as_ref()
        .bytes()
        .map(|b| if b == 0 { b' ' } else { b })
        .collect();
    let msg = CString::new(clean).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BnStatus {
    match e {
        Error::InvalidArgument(_) | Error::Bounds(_) => BnStatus::InvalidArgument,
        Error::Io(_) => BnStatus::Io,
        Error::Format(_) | Error::CorruptData(_) | Error::Json(_) => BnStatus::Format,
        Error::InsufficientData(_) | Error::DegenerateData(_) | Error::Data(_) => BnStatus::Data,
    }
}

fn fail(e: &Error) -> BnStatus {
    set_error(e.to_string());
    status_of(e)
}

/// Catches panics at the language boundary; unwinding into C is undefined
/// behaviour.
fn guarded(f: impl FnOnce() -> BnStatus) -> BnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            BnStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be NULL or a NUL-terminated string valid for the call.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, BnStatus> {
    if p.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(BnStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BnStatus::Utf8
    })
}

fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, BnStatus> {
    // Safety: the caller contract of every exported function requires
    // handle arguments to be NULL or live pointers from this library.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is NULL"));
        BnStatus::NullArgument
    })
}

fn out_arg<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, BnStatus> {
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{what} is NULL"));
        BnStatus::NullArgument
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the current thread's last error message into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
/// full message length in bytes, excluding the NUL. Call with NULL / 0 to
/// size the buffer first.
///
/// # Safety
/// `buf` must be NULL or valid for `cap` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn bn_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

/// Loads a scene directory (`scene.json` plus raw band files) into a new
/// handle stored in `*out`.
///
/// # Safety
/// `dir` must be a NUL-terminated path; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_load(dir: *const c_char, out: *mut *mut BnScene) -> BnStatus {
    guarded(|| {
        let slot = match out_arg(out, "out") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let dir = match str_arg(dir, "dir") {
            Ok(d) => d,
            Err(status) => return status,
        };
        match raster::load_scene(Path::new(dir)) {
            Ok(scene) => {
                *slot = Box::into_raw(Box::new(BnScene(scene)));
                BnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a scene handle. NULL is a no-op.
///
/// # Safety
/// `scene` must be NULL or a pointer from [`bn_scene_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_free(scene: *mut BnScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Scene width in pixels; 0 on NULL.
///
/// # Safety
/// `scene` must be NULL or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_width(scene: *const BnScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.width())
}

/// Scene height in pixels; 0 on NULL.
///
/// # Safety
/// `scene` must be NULL or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_height(scene: *const BnScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.height())
}

/// Number of reflectance bands in the scene; 0 on NULL.
///
/// # Safety
/// `scene` must be NULL or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_band_count(scene: *const BnScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.band_ids().count())
}

/// Whether the scene carries the named band (e.g. "B11"); false on NULL or
/// an unknown name.
///
/// # Safety
/// `scene` must be NULL or a live scene handle; `band` NULL or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bn_scene_has_band(scene: *const BnScene, band: *const c_char) -> bool {
    let Some(scene) = scene.as_ref() else {
        return false;
    };
    let Ok(name) = str_arg(band, "band") else {
        return false;
    };
    BandId::parse(name).is_ok_and(|id| scene.0.band(id).is_some())
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Loads trained network weights from a weight file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated path; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bn_model_load(path: *const c_char, out: *mut *mut BnModel) -> BnStatus {
    guarded(|| {
        let slot = match out_arg(out, "out") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match mlp::load_params(Path::new(path)) {
            Ok(params) => {
                *slot = Box::into_raw(Box::new(BnModel(params)));
                BnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a model handle. NULL is a no-op.
///
/// # Safety
/// `model` must be NULL or a pointer from [`bn_model_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn bn_model_free(model: *mut BnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input bands the model expects; 0 on NULL.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn bn_model_input_dim(model: *const BnModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_dim())
}

/// Segments `scene` with `model`. `bands` names the model's input bands in
/// training order (`n_bands` strings such as "B11"); pixels whose water
/// probability reaches `threshold` become water, scene-classification
/// no-data pixels become invalid. The new mask handle lands in `*out`.
///
/// # Safety
/// All handles must be live; `bands` must point to `n_bands` NUL-terminated
/// strings; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bn_predict_map(
    model: *const BnModel,
    scene: *const BnScene,
    bands: *const *const c_char,
    n_bands: usize,
    threshold: f64,
    out: *mut *mut BnMask,
) -> BnStatus {
    guarded(|| {
        let slot = match out_arg(out, "out") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let model = match ref_arg(model, "model") {
            Ok(m) => m,
            Err(status) => return status,
        };
        let scene = match ref_arg(scene, "scene") {
            Ok(s) => s,
            Err(status) => return status,
        };
        if bands.is_null() {
            set_error("bands is NULL");
            return BnStatus::NullArgument;
        }
        let mut ids = Vec::with_capacity(n_bands);
        for i in 0..n_bands {
            let name = match str_arg(*bands.add(i), "band name") {
                Ok(n) => n,
                Err(status) => return status,
            };
            match BandId::parse(name) {
                Ok(id) => ids.push(id),
                Err(e) => return fail(&e),
            }
        }
        match mlp::predict_map(&model.0, &scene.0, &ids, threshold) {
            Ok(mask) => {
                *slot = Box::into_raw(Box::new(BnMask(mask)));
                BnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

/// Frees a mask handle. NULL is a no-op.
///
/// # Safety
/// `mask` must be NULL or a mask pointer from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_free(mask: *mut BnMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Mask width in pixels; 0 on NULL.
///
/// # Safety
/// `mask` must be NULL or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_width(mask: *const BnMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.width)
}

/// Mask height in pixels; 0 on NULL.
///
/// # Safety
/// `mask` must be NULL or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_height(mask: *const BnMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.height)
}

/// Row-major per-pixel labels (0 non-water, 1 water, 255 invalid), one byte
/// per pixel, valid until the mask is freed. NULL on NULL input.
///
/// # Safety
/// `mask` must be NULL or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_data(mask: *const BnMask) -> *const u8 {
    mask.as_ref()
        .map_or(std::ptr::null(), |m| m.0.labels().as_ptr())
}

/// Number of water pixels; 0 on NULL.
///
/// # Safety
/// `mask` must be NULL or a live mask handle.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_count_water(mask: *const BnMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.count_water())
}

/// Change map between two masks of the same extent: water where exactly one
/// input is water, invalid where either is invalid. The new handle lands in
/// `*out`.
///
/// # Safety
/// `a` and `b` must be live mask handles; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_xor(
    a: *const BnMask,
    b: *const BnMask,
    out: *mut *mut BnMask,
) -> BnStatus {
    guarded(|| {
        let slot = match out_arg(out, "out") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let a = match ref_arg(a, "a") {
            Ok(m) => m,
            Err(status) => return status,
        };
        let b = match ref_arg(b, "b") {
            Ok(m) => m,
            Err(status) => return status,
        };
        match a.0.xor(&b.0) {
            Ok(mask) => {
                *slot = Box::into_raw(Box::new(BnMask(mask)));
                BnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the mask as a binary PGM file (water 255, non-water 0,
/// invalid 128).
///
/// # Safety
/// `mask` must be a live mask handle; `path` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn bn_mask_save_pgm(mask: *const BnMask, path: *const c_char) -> BnStatus {
    guarded(|| {
        let mask = match ref_arg(mask, "mask") {
            Ok(m) => m,
            Err(status) => return status,
        };
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match raster::save_mask_pgm(&mask.0, Path::new(path)) {
            Ok(()) => BnStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}
