//! Segmentation scoring: confusion matrices, intersection-over-union, and
//! the aggregate percent table used to compare bands and classifiers.

use std::io::Write;

use crate::error::{Error, Result};
use crate::raster::MASK_INVALID;

/// 2x2 confusion counts; rows are actual class, columns predicted class.
/// Class 0 is non-water, class 1 is water.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; 2]; 2],
}

/// Per-class intersection-over-union. `class_absent` is set when the class
/// occurs in neither truth nor prediction; the value is then 1.0 by
/// convention (two empty sets are vacuously identical).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iou {
    pub value: f64,
    pub class_absent: bool,
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    #[inline]
    pub fn record(&mut self, actual: u8, predicted: u8) {
        self.counts[actual as usize][predicted as usize] += 1;
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Entrywise sum; partial matrices from concurrent shards merge into
    /// the same totals regardless of shard boundaries.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for a in 0..2 {
            for p in 0..2 {
                self.counts[a][p] += other.counts[a][p];
            }
        }
    }

    /// Intersection-over-union of one class:
    /// `TP / (row_sum + col_sum - TP)`.
    pub fn iou(&self, class_index: usize) -> Iou {
        assert!(class_index < 2, "class_index must be 0 or 1");
        let i = class_index;
        let tp = self.counts[i][i];
        let row_sum = self.counts[i][0] + self.counts[i][1];
        let col_sum = self.counts[0][i] + self.counts[1][i];
        let denom = row_sum + col_sum - tp;
        if denom == 0 {
            Iou {
                value: 1.0,
                class_absent: true,
            }
        } else {
            Iou {
                value: tp as f64 / denom as f64,
                class_absent: false,
            }
        }
    }

    /// Mean intersection-over-union across both classes, in [0, 1].
    pub fn miou(&self) -> f64 {
        (self.iou(0).value + self.iou(1).value) / 2.0
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 1.0;
        }
        (self.counts[0][0] + self.counts[1][1]) as f64 / total as f64
    }
}

/// Accumulates a confusion matrix from parallel prediction/truth label
/// sequences. Pairs where either side is the invalid label are skipped.
pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::arg(format!(
            "prediction and truth lengths differ: {} vs {}",
            preds.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::new();
    for (&p, &t) in preds.iter().zip(truth) {
        if p == MASK_INVALID || t == MASK_INVALID {
            continue;
        }
        if p > 1 || t > 1 {
            return Err(Error::Data(format!(
                "label {} outside {{0, 1, 255}}",
                p.max(t)
            )));
        }
        cm.record(t, p);
    }
    Ok(cm)
}

/// Fraction of positions where prediction equals truth. Invalid pairs are
/// skipped; errors if nothing valid remains.
pub fn binary_accuracy(preds: &[u8], truth: &[u8]) -> Result<f64> {
    let cm = confusion(preds, truth)?;
    if cm.total() == 0 {
        return Err(Error::arg("no valid label pairs to score"));
    }
    Ok(cm.accuracy())
}

/// Aggregates a band x algorithm score matrix (cells on the 0-100 scale)
/// into per-row and per-column fractions of the maximum attainable score:
/// row percent = row sum / (100 * n_cols), column percent =
/// column sum / (100 * n_rows). Returned unrounded; round at display time.
pub fn percent_scores(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.is_empty() || matrix[0].is_empty() {
        return Err(Error::arg("percent_scores needs a non-empty matrix"));
    }
    let n_cols = matrix[0].len();
    for row in matrix {
        if row.len() != n_cols {
            return Err(Error::arg("percent_scores needs a rectangular matrix"));
        }
        if let Some(bad) = row
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 100.0)
        {
            return Err(Error::arg(format!("score {bad} outside [0, 100]")));
        }
    }
    let n_rows = matrix.len();
    let row_percents = matrix
        .iter()
        .map(|row| row.iter().sum::<f64>() / (100.0 * n_cols as f64))
        .collect();
    let col_percents = (0..n_cols)
        .map(|c| matrix.iter().map(|row| row[c]).sum::<f64>() / (100.0 * n_rows as f64))
        .collect();
    Ok((row_percents, col_percents))
}

/// Rounds half-up to two decimals (positive inputs).
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

fn cell_str(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Writes the ranking table as CSV: one row per band, one column per
/// algorithm, a trailing `percent` column and a trailing `percent` row.
/// Score cells use the 0-100 scale with two decimals; failed cells are
/// left empty. The bottom-right corner stays blank.
pub fn write_ranking_csv<W: Write>(
    mut out: W,
    bands: &[String],
    algos: &[String],
    cells: &[Vec<Option<f64>>],
    row_percents: &[f64],
    col_percents: &[f64],
) -> Result<()> {
    if cells.len() != bands.len() || row_percents.len() != bands.len() {
        return Err(Error::arg("ranking rows do not match band list"));
    }
    if col_percents.len() != algos.len() {
        return Err(Error::arg("ranking columns do not match algorithm list"));
    }
    writeln!(out, "band,{},percent", algos.join(","))?;
    for ((band, row), rp) in bands.iter().zip(cells).zip(row_percents) {
        if row.len() != algos.len() {
            return Err(Error::arg(
                "ranking row width does not match algorithm list",
            ));
        }
        let fields: Vec<String> = row
            .iter()
            .map(|c| c.map(cell_str).unwrap_or_default())
            .collect();
        writeln!(out, "{band},{},{}", fields.join(","), cell_str(*rp))?;
    }
    let fields: Vec<String> = col_percents.iter().map(|p| cell_str(*p)).collect();
    writeln!(out, "percent,{},", fields.join(","))?;
    Ok(())
}
