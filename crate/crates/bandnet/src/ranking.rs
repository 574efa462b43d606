//! The band-comparison experiment driver: every requested band crossed
//! with every requested classifier, fitted on the train split and scored
//! by validation mIoU, producing the ranked matrix.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::classifiers::{fit, ClassifierSpec, Variant};
use crate::error::{Error, Result};
use crate::metrics::{confusion, percent_scores};
use crate::raster::{BandId, Scene, WaterMask};
use crate::rng::derive_seed;
use crate::sampling::{balanced_sample, split, Dataset, SplitSpec};

/// How the pixel dataset behind the grid is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub n_per_class: usize,
    pub split: SplitSpec,
}

impl SamplingSpec {
    pub fn new(n_per_class: usize, split: SplitSpec) -> SamplingSpec {
        SamplingSpec { n_per_class, split }
    }

    /// Master seed for the whole experiment; sampling, splitting, and
    /// every per-cell fit derive from it.
    pub fn seed(&self) -> u64 {
        self.split.seed
    }
}

/// One grid entry: the validation mIoU on the 0-100 scale, or a note
/// explaining why the fit was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub miou: Option<f64>,
    pub note: Option<String>,
    pub millis: u64,
}

/// The full band-by-algorithm score matrix plus its percent aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub bands: Vec<BandId>,
    pub algorithms: Vec<Variant>,
    /// `cells[band_index][algo_index]`.
    pub cells: Vec<Vec<Cell>>,
    pub row_percents: Vec<f64>,
    pub col_percents: Vec<f64>,
    pub seed: u64,
    pub n_per_class: usize,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RankingResult {
    /// Score matrix with empty cells read as 0.0 (they contribute nothing
    /// to the percent aggregates).
    pub fn score_matrix(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.miou.unwrap_or(0.0)).collect())
            .collect()
    }

    pub fn band_names(&self) -> Vec<String> {
        self.bands.iter().map(|b| b.as_str().to_string()).collect()
    }

    pub fn algorithm_names(&self) -> Vec<String> {
        self.algorithms
            .iter()
            .map(|a| a.name().to_string())
            .collect()
    }

    pub fn cell_options(&self) -> Vec<Vec<Option<f64>>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.miou).collect())
            .collect()
    }
}

/// Stream index for a cell's derived seed. Both halves are intrinsic to
/// the band and classifier kind — not to their positions in the request —
/// so a cell computed in a one-band run matches the same cell inside the
/// full grid.
fn cell_stream(band: BandId, variant: &Variant) -> Result<u64> {
    let band_code = BandId::REFLECTANCE
        .iter()
        .position(|&b| b == band)
        .ok_or_else(|| Error::arg(format!("{} is not a reflectance band", band.as_str())))?
        as u64;
    let algo_code = match variant {
        Variant::LogisticRegression { .. } => 1u64,
        Variant::GaussianNaiveBayes => 2,
        Variant::RandomForest { .. } => 3,
        Variant::KNearest { .. } => 4,
        Variant::DecisionTree { .. } => 5,
        Variant::SgdLinear { .. } => 6,
        Variant::GradientBoostedTrees { .. } => 7,
        Variant::SvmRbf { .. } => 8,
    };
    Ok((band_code + 1) * 16 + algo_code)
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Fits one classifier on one band's train split and scores validation
/// mIoU (0-100). Skipped fits (degenerate or insufficient data) become
/// annotated gaps; anything else is a real error.
fn run_cell(dataset: &Dataset, band: BandId, variant: &Variant, master_seed: u64) -> Result<Cell> {
    let start = Instant::now();
    let seed = derive_seed(master_seed, cell_stream(band, variant)?);
    let spec = ClassifierSpec::new(variant.clone(), seed);
    let fitted = match fit(&spec, &dataset.train) {
        Ok(m) => m,
        Err(e @ (Error::DegenerateData(_) | Error::InsufficientData(_))) => {
            return Ok(Cell {
                miou: None,
                note: Some(e.to_string()),
                millis: start.elapsed().as_millis() as u64,
            });
        }
        Err(e) => return Err(e),
    };
    let mut preds = Vec::with_capacity(dataset.val.len());
    let mut truth = Vec::with_capacity(dataset.val.len());
    for p in &dataset.val {
        preds.push(fitted.predict(&p.features)?);
        truth.push(p.label);
    }
    let cm = confusion(&preds, &truth)?;
    Ok(Cell {
        miou: Some(cm.miou() * 100.0),
        note: None,
        millis: start.elapsed().as_millis() as u64,
    })
}

/// Grid driver over a pre-split dataset whose feature columns follow
/// `bands` order. Cells run in parallel but land in fixed positions.
pub(crate) fn rank_dataset(
    dataset: &Dataset,
    bands: &[BandId],
    algorithms: &[Variant],
    sampling: &SamplingSpec,
    started_unix_ms: u64,
) -> Result<RankingResult> {
    if bands.is_empty() || algorithms.is_empty() {
        return Err(Error::arg(
            "ranking needs at least one band and one algorithm",
        ));
    }
    for variant in algorithms {
        // Fail before any fitting if a stream can't be assigned.
        for &band in bands {
            cell_stream(band, variant)?;
        }
    }
    let band_sets: Vec<Dataset> = (0..bands.len())
        .map(|b| dataset.project_feature(b))
        .collect::<Result<_>>()?;

    let n_algos = algorithms.len();
    let flat: Vec<Cell> = (0..bands.len() * n_algos)
        .into_par_iter()
        .map(|idx| {
            let (b, a) = (idx / n_algos, idx % n_algos);
            run_cell(&band_sets[b], bands[b], &algorithms[a], sampling.seed())
        })
        .collect::<Result<_>>()?;
    let cells: Vec<Vec<Cell>> = flat.chunks(n_algos).map(|chunk| chunk.to_vec()).collect();

    let matrix: Vec<Vec<f64>> = cells
        .iter()
        .map(|row| row.iter().map(|c| c.miou.unwrap_or(0.0)).collect())
        .collect();
    let (row_percents, col_percents) = percent_scores(&matrix)?;

    Ok(RankingResult {
        bands: bands.to_vec(),
        algorithms: algorithms.to_vec(),
        cells,
        row_percents,
        col_percents,
        seed: sampling.seed(),
        n_per_class: sampling.n_per_class,
        started_unix_ms,
        finished_unix_ms: unix_ms(),
    })
}

/// Samples one balanced pixel dataset from the scene, splits it once, and
/// scores every (band, algorithm) pair on the shared validation split.
pub fn rank_bands(
    scene: &Scene,
    mask: &WaterMask,
    bands: &[BandId],
    algorithms: &[Variant],
    sampling: &SamplingSpec,
) -> Result<RankingResult> {
    let started = unix_ms();
    let points = balanced_sample(scene, bands, mask, sampling.n_per_class, sampling.seed())?;
    let dataset = split(&points, &sampling.split)?;
    rank_dataset(&dataset, bands, algorithms, sampling, started)
}

/// The winning cell: highest mIoU, ties broken by earlier band then
/// earlier algorithm.
pub fn best_cell(result: &RankingResult) -> Result<(BandId, Variant, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (b, row) in result.cells.iter().enumerate() {
        for (a, cell) in row.iter().enumerate() {
            if let Some(score) = cell.miou {
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((b, a, score));
                }
            }
        }
    }
    let (b, a, score) = best.ok_or_else(|| Error::arg("every ranking cell is empty"))?;
    Ok((result.bands[b], result.algorithms[a].clone(), score))
}
