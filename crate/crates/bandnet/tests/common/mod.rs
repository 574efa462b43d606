//! Shared fixtures for integration tests: a scene simulator with
//! engineered per-band class separation, synthetic reflectance datasets,
//! and the frozen published score matrix.

use bandnet::raster::{BandGrid, BandId, Scene, WaterMask};
use bandnet::rng::Rng;
use bandnet::sampling::SamplePoint;

/// Builds a scene whose left half is water. Each entry of `bands` gives
/// `(band, water_mean, land_mean)`; reflectance is Gaussian around the
/// class mean with shared `sigma`. Returns the scene and its ground truth.
pub fn simulated_scene(
    bands: &[(BandId, f64, f64)],
    width: usize,
    height: usize,
    sigma: f64,
    seed: u64,
) -> (Scene, WaterMask) {
    let mut rng = Rng::new(seed);
    let mut grids = Vec::new();
    for &(id, water_mean, land_mean) in bands {
        let mut values = Vec::with_capacity(width * height);
        for _ in 0..height {
            for x in 0..width {
                let mean = if x < width / 2 { water_mean } else { land_mean };
                let v = (mean + sigma * rng.next_gaussian()).clamp(0.0, 1.0);
                values.push((v * 10_000.0).round() as u16);
            }
        }
        grids.push(BandGrid::new(id, width, height, 10, values).unwrap());
    }
    let labels: Vec<u8> = (0..width * height)
        .map(|i| u8::from(i % width < width / 2))
        .collect();
    let mask = WaterMask::new(width, height, labels).unwrap();
    let scene = Scene::new("SIM", "2021-06-01", grids, None, None).unwrap();
    (scene, mask)
}

/// Two 1-D Gaussian reflectance classes: non-water at `mu0`, water at
/// `mu1`, clipped below at zero like real reflectance codes.
pub fn gaussian_points(
    mu0: f64,
    mu1: f64,
    sigma: f64,
    n_per_class: usize,
    seed: u64,
) -> Vec<SamplePoint> {
    let mut rng = Rng::new(seed);
    (0..2 * n_per_class)
        .map(|i| {
            let label = (i % 2) as u8;
            let mu = if label == 1 { mu1 } else { mu0 };
            SamplePoint {
                features: vec![(mu + sigma * rng.next_gaussian()).max(0.0)],
                label,
                tile: "synth".to_string(),
                x: i,
                y: 0,
            }
        })
        .collect()
}

/// Band order of [`published_matrix`] rows.
pub const PUBLISHED_BANDS: [BandId; 10] = [
    BandId::B2,
    BandId::B3,
    BandId::B4,
    BandId::B5,
    BandId::B6,
    BandId::B7,
    BandId::B8,
    BandId::B8A,
    BandId::B11,
    BandId::B12,
];

/// Published single-band validation mIoU matrix (percent scale), rows in
/// [`PUBLISHED_BANDS`] order, columns LR, GNB, RF, KN, DT, SGD, GBT, SVM.
pub fn published_matrix() -> Vec<Vec<f64>> {
    vec![
        vec![36.93, 34.23, 42.07, 42.74, 42.45, 35.26, 42.62, 40.76],
        vec![36.79, 32.04, 41.58, 41.69, 41.89, 40.99, 41.45, 42.06],
        vec![44.37, 42.66, 51.34, 51.58, 51.82, 48.33, 51.43, 61.06],
        vec![49.17, 48.23, 55.02, 55.30, 55.86, 58.11, 56.51, 56.48],
        vec![72.26, 77.27, 76.02, 72.68, 76.75, 79.44, 79.41, 78.92],
        vec![73.66, 79.53, 76.52, 73.88, 77.16, 78.50, 77.62, 78.18],
        vec![70.15, 75.08, 74.40, 78.02, 75.72, 73.16, 79.05, 79.78],
        vec![75.81, 82.77, 77.16, 72.82, 77.72, 78.19, 78.03, 79.69],
        vec![80.75, 87.71, 81.71, 78.61, 82.30, 78.00, 82.20, 84.65],
        vec![71.33, 86.21, 78.01, 78.21, 80.06, 77.36, 84.68, 84.69],
    ]
}

/// Published overall-accuracy fractions accompanying the matrix: one per
/// band row and one per algorithm column.
pub const PUBLISHED_ROW_PERCENTS: [f64; 10] =
    [0.35, 0.35, 0.43, 0.47, 0.67, 0.67, 0.66, 0.68, 0.71, 0.69];
pub const PUBLISHED_COL_PERCENTS: [f64; 8] = [0.61, 0.65, 0.65, 0.65, 0.66, 0.65, 0.67, 0.69];

/// Spearman rank correlation; assumes no ties in either sequence.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
