//! Seeded, class-balanced pixel sampling and mutually exclusive
//! train/validation/test splits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::raster::{BandId, Scene, WaterMask};
use crate::rng::Rng;

/// One labeled pixel: reflectances for the selected bands plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    /// Physical reflectance per selected band, in selection order.
    pub features: Vec<f64>,
    /// 0 = non-water, 1 = water.
    pub label: u8,
    pub tile: String,
    pub x: usize,
    pub y: usize,
}

/// Seed and fractions for a three-way split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    /// (train, val, test); each positive, summing to 1.
    pub fractions: (f64, f64, f64),
}

impl SplitSpec {
    pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);

    pub fn new(seed: u64, fractions: (f64, f64, f64)) -> Result<SplitSpec> {
        let spec = SplitSpec { seed, fractions };
        spec.validate()?;
        Ok(spec)
    }

    /// Default 0.70/0.15/0.15 fractions.
    pub fn with_seed(seed: u64) -> SplitSpec {
        SplitSpec {
            seed,
            fractions: Self::DEFAULT_FRACTIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(Error::arg("split fractions must all be positive"));
        }
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!(
                "split fractions must sum to 1, got {}",
                a + b + c
            )));
        }
        Ok(())
    }
}

/// Pairwise-disjoint splits whose union is the sampled pool.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<SamplePoint>,
    pub val: Vec<SamplePoint>,
    pub test: Vec<SamplePoint>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps a single feature column, preserving labels, provenance, and
    /// split membership — the per-band view of a multi-band dataset.
    pub fn project_feature(&self, index: usize) -> Result<Dataset> {
        let project = |points: &[SamplePoint]| -> Result<Vec<SamplePoint>> {
            points
                .iter()
                .map(|p| {
                    let f = p.features.get(index).copied().ok_or_else(|| {
                        Error::arg(format!(
                            "feature index {index} out of range for {}-feature points",
                            p.features.len()
                        ))
                    })?;
                    Ok(SamplePoint {
                        features: vec![f],
                        ..p.clone()
                    })
                })
                .collect()
        };
        Ok(Dataset {
            train: project(&self.train)?,
            val: project(&self.val)?,
            test: project(&self.test)?,
        })
    }
}

/// Draws exactly `n_per_class` water and `n_per_class` non-water pixels
/// uniformly without replacement, seeded; water points come first, each
/// class in selection order. Invalid mask pixels are never sampled.
pub fn balanced_sample(
    scene: &Scene,
    bands: &[BandId],
    mask: &WaterMask,
    n_per_class: usize,
    seed: u64,
) -> Result<Vec<SamplePoint>> {
    if bands.is_empty() {
        return Err(Error::arg("no bands selected"));
    }
    if n_per_class == 0 {
        return Err(Error::arg("n_per_class must be positive"));
    }
    if mask.width != scene.width() || mask.height != scene.height() {
        return Err(Error::arg(format!(
            "mask {}x{} does not match scene {}x{}",
            mask.width,
            mask.height,
            scene.width(),
            scene.height()
        )));
    }
    let grids = bands
        .iter()
        .map(|&b| {
            scene
                .band(b)
                .ok_or_else(|| Error::arg(format!("scene has no band {b}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut water = Vec::new();
    let mut non_water = Vec::new();
    for (i, &label) in mask.labels().iter().enumerate() {
        match label {
            1 => water.push(i),
            0 => non_water.push(i),
            _ => {}
        }
    }
    for (name, pool) in [("water", &water), ("non-water", &non_water)] {
        if pool.len() < n_per_class {
            return Err(Error::InsufficientData(format!(
                "need {n_per_class} {name} pixels, mask has {}",
                pool.len()
            )));
        }
    }

    let mut rng = Rng::new(seed);
    let mut points = Vec::with_capacity(2 * n_per_class);
    for (pool, label) in [(&water, 1u8), (&non_water, 0u8)] {
        for idx in rng.sample_indices(pool.len(), n_per_class) {
            let flat = pool[idx];
            let (x, y) = (flat % mask.width, flat / mask.width);
            points.push(SamplePoint {
                features: grids.iter().map(|g| g.reflectance(x, y)).collect(),
                label,
                tile: scene.tile_id.clone(),
                x,
                y,
            });
        }
    }
    Ok(points)
}

/// Deterministically shuffles and partitions `points` into train/val/test.
///
/// Each class is shuffled and cut separately (floor of the train and val
/// fractions, remainder to test) so splits stay balanced to within one
/// point, then each split is shuffled once more to interleave the classes.
pub fn split(points: &[SamplePoint], spec: &SplitSpec) -> Result<Dataset> {
    if points.is_empty() {
        return Err(Error::arg("cannot split an empty point set"));
    }
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let mut dataset = Dataset::default();
    for label in [0u8, 1u8] {
        let mut class: Vec<&SamplePoint> = points.iter().filter(|p| p.label == label).collect();
        rng.shuffle(&mut class);
        let n = class.len();
        let n_train = (n as f64 * spec.fractions.0).floor() as usize;
        let n_val = (n as f64 * spec.fractions.1).floor() as usize;
        dataset
            .train
            .extend(class[..n_train].iter().map(|p| (*p).clone()));
        dataset
            .val
            .extend(class[n_train..n_train + n_val].iter().map(|p| (*p).clone()));
        dataset
            .test
            .extend(class[n_train + n_val..].iter().map(|p| (*p).clone()));
    }
    rng.shuffle(&mut dataset.train);
    rng.shuffle(&mut dataset.val);
    rng.shuffle(&mut dataset.test);
    Ok(dataset)
}

// ---------------------------------------------------------------------------
// CSV export / import
// ---------------------------------------------------------------------------

/// Writes points as CSV: lowercase band columns, then `label,tile,x,y`.
/// Reflectances carry six fractional digits (exact for 16-bit codes).
pub fn write_points_csv<W: Write>(
    mut out: W,
    bands: &[BandId],
    points: &[SamplePoint],
) -> Result<()> {
    let band_cols: Vec<String> = bands
        .iter()
        .map(|b| b.as_str().to_ascii_lowercase())
        .collect();
    writeln!(out, "{},label,tile,x,y", band_cols.join(","))?;
    for p in points {
        if p.features.len() != bands.len() {
            return Err(Error::arg(format!(
                "point has {} features for {} band columns",
                p.features.len(),
                bands.len()
            )));
        }
        let feats: Vec<String> = p.features.iter().map(|f| format!("{f:.6}")).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            feats.join(","),
            p.label,
            p.tile,
            p.x,
            p.y
        )?;
    }
    Ok(())
}

/// Reads points written by [`write_points_csv`]; returns the band list
/// recovered from the header together with the points.
pub fn read_points_csv<R: BufRead>(reader: R) -> Result<(Vec<BandId>, Vec<SamplePoint>)> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("empty dataset CSV"))??;
    let cols: Vec<&str> = header.split(',').collect();
    let label_pos = cols
        .iter()
        .position(|&c| c == "label")
        .ok_or_else(|| Error::format("dataset CSV header lacks a label column"))?;
    if cols.len() != label_pos + 4 || cols[label_pos + 1..] != ["tile", "x", "y"] {
        return Err(Error::format(
            "dataset CSV header must end with label,tile,x,y",
        ));
    }
    let bands = cols[..label_pos]
        .iter()
        .map(|c| BandId::parse(c))
        .collect::<Result<Vec<_>>>()?;
    if bands.is_empty() {
        return Err(Error::format("dataset CSV has no band columns"));
    }

    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::format(format!(
                "dataset CSV line {}: {} fields, expected {}",
                lineno + 2,
                fields.len(),
                cols.len()
            )));
        }
        let bad =
            |what: &str| Error::format(format!("dataset CSV line {}: bad {what}", lineno + 2));
        let features = fields[..label_pos]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad("reflectance")))
            .collect::<Result<Vec<f64>>>()?;
        let label: u8 = fields[label_pos].parse().map_err(|_| bad("label"))?;
        if label > 1 {
            return Err(bad("label"));
        }
        points.push(SamplePoint {
            features,
            label,
            tile: fields[label_pos + 1].to_string(),
            x: fields[label_pos + 2].parse().map_err(|_| bad("x"))?,
            y: fields[label_pos + 3].parse().map_err(|_| bad("y"))?,
        });
    }
    Ok((bands, points))
}
