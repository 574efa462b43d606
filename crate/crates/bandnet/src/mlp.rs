//! The band-input MLP: two 32-unit ReLU layers, inverted dropout before a
//! sigmoid head. Forward pass, hand-derived backpropagation, Adam, early
//! stopping on validation loss, and whole-scene map inference.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{BandGrid, BandId, Scene, WaterMask, MASK_INVALID, SCL_NO_DATA};
use crate::rng::{derive_seed, Rng};
use crate::sampling::{Dataset, SamplePoint};

pub const HIDDEN_WIDTH: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.4;
/// Probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] so the loss
/// stays finite.
pub const PROB_CLAMP: f64 = 1e-7;

/// Architecture description: input width, two hidden widths, dropout rate
/// applied to the second hidden layer's activations at train time.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub dropout_rate: f64,
}

impl MlpConfig {
    /// The standard shape: `input_dim` reflectance features, 32/32 hidden
    /// units, 0.4 dropout.
    pub fn new(input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden: [HIDDEN_WIDTH, HIDDEN_WIDTH],
            dropout_rate: DEFAULT_DROPOUT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::arg("input_dim must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::arg("hidden widths must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::arg("dropout_rate must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Trainable-parameter count for a config.
pub fn param_count(config: &MlpConfig) -> usize {
    let d = config.input_dim;
    let [h1, h2] = config.hidden;
    (d * h1 + h1) + (h1 * h2 + h2) + (h2 + 1)
}

/// Network weights, stored as one flat buffer in file order:
/// W1 (h1 x d, unit-major), b1, W2 (h2 x h1), b2, W3 (h2), b3.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    input_dim: usize,
    hidden: [usize; 2],
    values: Vec<f64>,
}

/// Flat offsets of the six parameter blocks.
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    total: usize,
}

fn layout(d: usize, hidden: [usize; 2]) -> Layout {
    let [h1, h2] = hidden;
    let w1 = 0;
    let b1 = w1 + h1 * d;
    let w2 = b1 + h1;
    let b2 = w2 + h2 * h1;
    let w3 = b2 + h2;
    let b3 = w3 + h2;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        total: b3 + 1,
    }
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> [usize; 2] {
        self.hidden
    }

    /// The flat parameter buffer; its length equals [`param_count`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable view of the flat parameter buffer, for external optimizers
    /// and perturbation-based checks.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn layout(&self) -> Layout {
        layout(self.input_dim, self.hidden)
    }

    fn zeros(config: &MlpConfig) -> MlpParams {
        MlpParams {
            input_dim: config.input_dim,
            hidden: config.hidden,
            values: vec![0.0; param_count(config)],
        }
    }

    pub fn config(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.input_dim,
            hidden: self.hidden,
            dropout_rate: DEFAULT_DROPOUT,
        }
    }
}

/// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero
/// biases. Deterministic per seed.
pub fn init_params(config: &MlpConfig, seed: u64) -> Result<MlpParams> {
    config.validate()?;
    let mut params = MlpParams::zeros(config);
    let lt = params.layout();
    let d = config.input_dim;
    let [h1, h2] = config.hidden;
    let mut rng = Rng::new(seed);
    fn fill(
        values: &mut [f64],
        range: std::ops::Range<usize>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in &mut values[range] {
            *v = rng.next_range_f64(-limit, limit);
        }
    }
    fill(&mut params.values, lt.w1..lt.b1, d, h1, &mut rng);
    fill(&mut params.values, lt.w2..lt.b2, h1, h2, &mut rng);
    fill(&mut params.values, lt.w3..lt.b3, h2, 1, &mut rng);
    Ok(params)
}

/// Train-time dropout decisions for the second hidden layer: surviving
/// activations are scaled by 1/(1-rate) so inference needs no rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    rate: f64,
}

impl DropoutMask {
    pub fn sample(rng: &mut Rng, width: usize, rate: f64) -> Result<DropoutMask> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::arg("dropout rate must be in [0, 1)"));
        }
        let keep = (0..width).map(|_| rng.next_f64() >= rate).collect();
        Ok(DropoutMask { keep, rate })
    }

    /// Keeps every unit; train-mode forward with this mask still applies
    /// the 1/(1-rate) rescale.
    pub fn all_kept(width: usize, rate: f64) -> Result<DropoutMask> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::arg("dropout rate must be in [0, 1)"));
        }
        Ok(DropoutMask {
            keep: vec![true; width],
            rate,
        })
    }

    /// Per-unit multiplier: 0 when dropped, 1/(1-rate) when kept.
    fn scale(&self, unit: usize) -> f64 {
        if self.keep[unit] {
            1.0 / (1.0 - self.rate)
        } else {
            0.0
        }
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Intermediate activations kept for backpropagation.
struct ForwardTrace {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    /// Post-dropout second-layer activations (equals `relu(z2)` when no
    /// mask is active).
    a2: Vec<f64>,
    p: f64,
}

fn forward_trace(params: &MlpParams, x: &[f64], dropout: Option<&DropoutMask>) -> ForwardTrace {
    let lt = params.layout();
    let d = params.input_dim;
    let [h1, h2] = params.hidden;
    let v = &params.values;

    let mut z1 = vec![0.0; h1];
    let mut a1 = vec![0.0; h1];
    for u in 0..h1 {
        let mut z = v[lt.b1 + u];
        let row = &v[lt.w1 + u * d..lt.w1 + (u + 1) * d];
        for (w, xi) in row.iter().zip(x) {
            z += w * xi;
        }
        z1[u] = z;
        a1[u] = z.max(0.0);
    }

    let mut z2 = vec![0.0; h2];
    let mut a2 = vec![0.0; h2];
    for u in 0..h2 {
        let mut z = v[lt.b2 + u];
        let row = &v[lt.w2 + u * h1..lt.w2 + (u + 1) * h1];
        for (w, ai) in row.iter().zip(&a1) {
            z += w * ai;
        }
        z2[u] = z;
        let mut a = z.max(0.0);
        if let Some(mask) = dropout {
            a *= mask.scale(u);
        }
        a2[u] = a;
    }

    let mut z3 = v[lt.b3];
    for u in 0..h2 {
        z3 += v[lt.w3 + u] * a2[u];
    }
    ForwardTrace {
        z1,
        a1,
        z2,
        a2,
        p: clamp_prob(sigmoid(z3)),
    }
}

fn check_input(params: &MlpParams, x: &[f64], dropout: Option<&DropoutMask>) -> Result<()> {
    if x.len() != params.input_dim {
        return Err(Error::arg(format!(
            "network expects {} inputs, got {}",
            params.input_dim,
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite network input".to_string()));
    }
    if let Some(mask) = dropout {
        if mask.keep.len() != params.hidden[1] {
            return Err(Error::arg(format!(
                "dropout mask covers {} units, layer has {}",
                mask.keep.len(),
                params.hidden[1]
            )));
        }
    }
    Ok(())
}

/// Water probability for one input row. `dropout: None` is inference;
/// `Some(mask)` applies the mask's inverted-dropout scaling to the second
/// hidden layer.
pub fn forward(params: &MlpParams, x: &[f64], dropout: Option<&DropoutMask>) -> Result<f64> {
    check_input(params, x, dropout)?;
    Ok(forward_trace(params, x, dropout).p)
}

/// Binary cross-entropy with the probability clamped away from 0 and 1.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = clamp_prob(p);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Parameter-shaped gradients, flat in the same order as
/// [`MlpParams::values`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    values: Vec<f64>,
}

impl MlpGrads {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Gradients of the mean BCE over `batch`, plus that mean loss. One
/// dropout mask applies to the whole batch; pass `None` to differentiate
/// the inference-mode network.
pub fn gradients(
    params: &MlpParams,
    batch: &[SamplePoint],
    dropout: Option<&DropoutMask>,
) -> Result<(MlpGrads, f64)> {
    if batch.is_empty() {
        return Err(Error::arg("gradient batch is empty"));
    }
    let lt = params.layout();
    let d = params.input_dim;
    let [h1, h2] = params.hidden;
    let v = &params.values;
    let mut g = vec![0.0; lt.total];
    let mut loss_sum = 0.0;
    let inv_n = 1.0 / batch.len() as f64;

    for point in batch {
        if point.label > 1 {
            return Err(Error::Data(format!(
                "label {} outside {{0, 1}}",
                point.label
            )));
        }
        let x = &point.features;
        check_input(params, x, dropout)?;
        let tr = forward_trace(params, x, dropout);
        loss_sum += bce_loss(tr.p, point.label);

        // d(mean BCE)/dz3 through the sigmoid head.
        let dz3 = (tr.p - f64::from(point.label)) * inv_n;
        for u in 0..h2 {
            g[lt.w3 + u] += dz3 * tr.a2[u];
        }
        g[lt.b3] += dz3;

        let mut dz2 = vec![0.0; h2];
        for u in 0..h2 {
            if tr.z2[u] <= 0.0 {
                continue;
            }
            let mut da = dz3 * v[lt.w3 + u];
            if let Some(mask) = dropout {
                da *= mask.scale(u);
            }
            dz2[u] = da;
        }
        for u in 0..h2 {
            let dz = dz2[u];
            if dz == 0.0 {
                continue;
            }
            let row = lt.w2 + u * h1;
            for (i, ai) in tr.a1.iter().enumerate() {
                g[row + i] += dz * ai;
            }
            g[lt.b2 + u] += dz;
        }

        let mut dz1 = vec![0.0; h1];
        for (u, &dz) in dz2.iter().enumerate() {
            if dz == 0.0 {
                continue;
            }
            let row = lt.w2 + u * h1;
            for (i, slot) in dz1.iter_mut().enumerate() {
                *slot += dz * v[row + i];
            }
        }
        for u in 0..h1 {
            if tr.z1[u] <= 0.0 {
                continue;
            }
            let dz = dz1[u];
            let row = lt.w1 + u * d;
            for (i, xi) in x.iter().enumerate() {
                g[row + i] += dz * xi;
            }
            g[lt.b1 + u] += dz;
        }
    }

    Ok((MlpGrads { values: g }, loss_sum * inv_n))
}

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::arg("learning_rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::arg("Adam betas must be in [0, 1)"));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::arg("epsilon must be > 0"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::arg("batch_size and max_epochs must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::arg("patience must be >= 1"));
        }
        Ok(())
    }
}

/// Per-epoch losses and validation accuracy; `best_epoch` indexes the
/// epoch whose weights `train` returned.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_acc: Vec<f64>,
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }

    /// CSV export, one row per epoch (1-based in the file).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_loss,val_loss,val_acc")?;
        for i in 0..self.epochs() {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6}",
                i + 1,
                self.train_loss[i],
                self.val_loss[i],
                self.val_acc[i]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn mean_val_metrics(params: &MlpParams, val: &[SamplePoint]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for p in val {
        let prob = forward(params, &p.features, None)?;
        loss += bce_loss(prob, p.label);
        let pred = u8::from(prob >= 0.5);
        correct += usize::from(pred == p.label);
    }
    let n = val.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains with Adam and early stopping: monitors validation loss every
/// epoch, stops after `patience` epochs without improvement, and returns
/// the weights from the best epoch.
pub fn train(
    dataset: &Dataset,
    config: &MlpConfig,
    tc: &TrainConfig,
) -> Result<(MlpParams, TrainHistory)> {
    config.validate()?;
    tc.validate()?;
    if dataset.train.is_empty() || dataset.val.is_empty() {
        return Err(Error::arg("training needs non-empty train and val splits"));
    }
    for p in dataset.train.iter().chain(&dataset.val) {
        if p.features.len() != config.input_dim {
            return Err(Error::arg(format!(
                "network expects {} inputs, point has {}",
                config.input_dim,
                p.features.len()
            )));
        }
    }

    let mut params = init_params(config, derive_seed(tc.seed, 1))?;
    let mut rng = Rng::new(derive_seed(tc.seed, 2));
    let n_params = params.values.len();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0u64;

    let n = dataset.train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        val_acc: Vec::new(),
        best_epoch: 0,
    };
    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut wait = 0usize;
    let mut batch = Vec::with_capacity(tc.batch_size);

    for epoch in 0..tc.max_epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(tc.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset.train[i].clone()));
            let mask = DropoutMask::sample(&mut rng, config.hidden[1], config.dropout_rate)?;
            let (grads, batch_loss) = gradients(&params, &batch, Some(&mask))?;
            loss_sum += batch_loss * batch.len() as f64;

            step += 1;
            let bc1 = 1.0 - tc.beta1.powi(step as i32);
            let bc2 = 1.0 - tc.beta2.powi(step as i32);
            for i in 0..n_params {
                let g = grads.values[i];
                m[i] = tc.beta1 * m[i] + (1.0 - tc.beta1) * g;
                v[i] = tc.beta2 * v[i] + (1.0 - tc.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params.values[i] -= tc.learning_rate * m_hat / (v_hat.sqrt() + tc.epsilon);
            }
        }

        let (val_loss, val_acc) = mean_val_metrics(&params, &dataset.val)?;
        history.train_loss.push(loss_sum / n as f64);
        history.val_loss.push(val_loss);
        history.val_acc.push(val_acc);

        if val_loss < best_loss {
            best_loss = val_loss;
            history.best_epoch = epoch;
            best = params.clone();
            wait = 0;
        } else {
            wait += 1;
            if wait >= tc.patience {
                break;
            }
        }
    }

    Ok((best, history))
}

/// Segments a whole scene: gathers `bands` per pixel, thresholds the
/// network's probability, and marks SCL no-data pixels invalid.
/// Deterministic regardless of worker count.
pub fn predict_map(
    params: &MlpParams,
    scene: &Scene,
    bands: &[BandId],
    threshold: f64,
) -> Result<WaterMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::arg("threshold must be in (0, 1)"));
    }
    if bands.len() != params.input_dim {
        return Err(Error::arg(format!(
            "network expects {} bands, got {}",
            params.input_dim,
            bands.len()
        )));
    }
    let grids: Vec<&BandGrid> = bands
        .iter()
        .map(|&b| {
            scene
                .band(b)
                .ok_or_else(|| Error::arg(format!("scene is missing band {}", b.as_str())))
        })
        .collect::<Result<_>>()?;
    let width = scene.width();
    let height = scene.height();
    let scl = scene.scl();

    let mut labels = vec![0u8; width * height];
    labels
        .par_chunks_mut(width)
        .enumerate()
        .try_for_each(|(y, row)| -> Result<()> {
            let mut x = vec![0.0; grids.len()];
            for (col, slot) in row.iter_mut().enumerate() {
                if let Some(scl) = scl {
                    if scl.get(col, y) == SCL_NO_DATA {
                        *slot = MASK_INVALID;
                        continue;
                    }
                }
                for (xi, grid) in x.iter_mut().zip(&grids) {
                    *xi = grid.reflectance(col, y);
                }
                let p = forward(params, &x, None)?;
                *slot = u8::from(p >= threshold);
            }
            Ok(())
        })?;
    WaterMask::new(width, height, labels)
}

const MAGIC: &[u8; 4] = b"BNET";
const VERSION: u16 = 1;

/// Serializes weights: magic, version, input width, hidden widths, then
/// the flat little-endian f64 buffer in W1,b1,W2,b2,W3,b3 order.
pub fn write_params<W: Write>(params: &MlpParams, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let dims = [
        params.input_dim as u32,
        params.hidden[0] as u32,
        params.hidden[1] as u32,
    ];
    for dim in dims {
        out.write_all(&dim.to_le_bytes())?;
    }
    for v in &params.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_params<R: Read>(mut input: R) -> Result<MlpParams> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::corrupt("weight file truncated"))?;
    if &magic != MAGIC {
        return Err(Error::format("not a network weight file (bad magic)"));
    }
    let mut u16buf = [0u8; 2];
    input
        .read_exact(&mut u16buf)
        .map_err(|_| Error::corrupt("weight file truncated"))?;
    let version = u16::from_le_bytes(u16buf);
    if version != VERSION {
        return Err(Error::format(format!(
            "unsupported weight file version {version}"
        )));
    }
    let mut dims = [0u32; 3];
    for dim in &mut dims {
        let mut buf = [0u8; 4];
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::corrupt("weight file truncated"))?;
        *dim = u32::from_le_bytes(buf);
    }
    let (d, h1, h2) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    if d == 0 || h1 == 0 || h2 == 0 {
        return Err(Error::corrupt("weight file declares a zero-width layer"));
    }
    let count = layout(d, [h1, h2]).total;
    let mut values = vec![0.0; count];
    for v in &mut values {
        let mut buf = [0u8; 8];
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::corrupt("weight file truncated"))?;
        *v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(Error::corrupt("non-finite weight in file"));
        }
    }
    Ok(MlpParams {
        input_dim: d,
        hidden: [h1, h2],
        values,
    })
}

pub fn save_params(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    write_params(params, std::io::BufWriter::new(file))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<MlpParams> {
    let file = fs::File::open(path.as_ref())?;
    read_params(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BandGrid;
    use crate::sampling::{split, SplitSpec};

    fn point(features: Vec<f64>, label: u8) -> SamplePoint {
        SamplePoint {
            features,
            label,
            tile: "synth".to_string(),
            x: 0,
            y: 0,
        }
    }

    #[test]
    fn parameter_counts_for_small_inputs() {
        assert_eq!(param_count(&MlpConfig::new(1)), 1153);
        assert_eq!(param_count(&MlpConfig::new(2)), 1185);
        assert_eq!(param_count(&MlpConfig::new(3)), 1217);
    }

    #[test]
    fn count_matches_allocation() {
        for d in [1, 2, 3, 7, 10] {
            let config = MlpConfig::new(d);
            let params = init_params(&config, 5).unwrap();
            assert_eq!(params.values().len(), param_count(&config));
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let config = MlpConfig::new(1);
        let a = init_params(&config, 11).unwrap();
        let b = init_params(&config, 11).unwrap();
        let c = init_params(&config, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);

        let lt = a.layout();
        let w1_limit = (6.0 / 33.0f64).sqrt();
        assert!(a.values()[lt.w1..lt.b1].iter().all(|w| w.abs() <= w1_limit));
        let w2_limit = (6.0 / 64.0f64).sqrt();
        assert!(a.values()[lt.w2..lt.b2].iter().all(|w| w.abs() <= w2_limit));
        // Every bias block is zero.
        assert!(a.values()[lt.b1..lt.w2].iter().all(|&b| b == 0.0));
        assert!(a.values()[lt.b2..lt.w3].iter().all(|&b| b == 0.0));
        assert_eq!(a.values()[lt.b3], 0.0);
    }

    #[test]
    fn zero_network_is_maximally_uncertain() {
        let config = MlpConfig::new(3);
        let params = MlpParams::zeros(&config);
        let p = forward(&params, &[0.1, 0.5, 0.9], None).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn inference_is_deterministic_and_open_interval() {
        let params = init_params(&MlpConfig::new(2), 3).unwrap();
        let x = [0.25, 0.75];
        let a = forward(&params, &x, None).unwrap();
        let b = forward(&params, &x, None).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn all_ones_mask_only_rescales_the_dropped_layer() {
        let config = MlpConfig::new(2);
        let params = init_params(&config, 7).unwrap();
        let x = [0.3, 0.6];
        let mask = DropoutMask::all_kept(32, 0.4).unwrap();
        let trained = forward(&params, &x, Some(&mask)).unwrap();

        // Recompute by scaling the inference-mode second-layer activations
        // by 1/0.6 before the head.
        let tr = forward_trace(&params, &x, None);
        let lt = params.layout();
        let mut z3 = params.values()[lt.b3];
        for u in 0..32 {
            z3 += params.values()[lt.w3 + u] * tr.a2[u] / 0.6;
        }
        assert!((trained - clamp_prob(sigmoid(z3))).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = init_params(&MlpConfig::new(2), 1).unwrap();
        assert!(forward(&params, &[0.1], None).is_err());
        assert!(forward(&params, &[0.1, f64::NAN], None).is_err());
        let narrow = DropoutMask::all_kept(8, 0.4).unwrap();
        assert!(forward(&params, &[0.1, 0.2], Some(&narrow)).is_err());
        assert!(DropoutMask::sample(&mut Rng::new(0), 32, 1.0).is_err());
    }

    #[test]
    fn loss_closed_forms() {
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(0.5, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(1.0 - 1e-7, 1) - 1e-7).abs() < 1e-9);
        // Fully clamped wrong answer: -ln(1e-7).
        assert!((bce_loss(0.0, 1) - 16.11809565095832).abs() < 1e-10);
        assert!(bce_loss(1.0, 0).is_finite());
    }

    #[test]
    fn empty_batch_rejected() {
        let params = init_params(&MlpConfig::new(1), 1).unwrap();
        assert!(gradients(&params, &[], None).is_err());
    }

    #[test]
    fn duplicated_sample_matches_single_sample_gradient() {
        let params = init_params(&MlpConfig::new(2), 9).unwrap();
        let single = [point(vec![0.2, 0.7], 1)];
        let double = [point(vec![0.2, 0.7], 1), point(vec![0.2, 0.7], 1)];
        let (g1, l1) = gradients(&params, &single, None).unwrap();
        let (g2, l2) = gradients(&params, &double, None).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    /// Central finite differences over every parameter, three seeds.
    #[test]
    fn analytic_gradients_match_finite_differences() {
        let h = 1e-5;
        for seed in [1u64, 2, 3] {
            let config = MlpConfig::new(3);
            let mut params = init_params(&config, seed).unwrap();
            let batch = [
                point(vec![0.12, 0.55, 0.81], 1),
                point(vec![0.43, 0.09, 0.37], 0),
                point(vec![0.78, 0.64, 0.22], 1),
            ];
            let (grads, _) = gradients(&params, &batch, None).unwrap();
            let mut worst = 0.0f64;
            for i in 0..params.values.len() {
                let keep = params.values[i];
                params.values[i] = keep + h;
                let up = batch_loss(&params, &batch);
                params.values[i] = keep - h;
                let down = batch_loss(&params, &batch);
                params.values[i] = keep;
                let fd = (up - down) / (2.0 * h);
                let g = grads.values()[i];
                let denom = g.abs().max(fd.abs()).max(1e-8);
                worst = worst.max((g - fd).abs() / denom);
            }
            assert!(worst < 1e-4, "seed {seed}: max relative error {worst}");
        }
    }

    fn batch_loss(params: &MlpParams, batch: &[SamplePoint]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|p| bce_loss(forward(params, &p.features, None).unwrap(), p.label))
            .sum();
        total / batch.len() as f64
    }

    #[test]
    fn gradients_respect_dropout_mask() {
        let config = MlpConfig::new(2);
        let params = init_params(&config, 21).unwrap();
        let batch = [point(vec![0.3, 0.8], 1)];
        let mut rng = Rng::new(40);
        let mask = DropoutMask::sample(&mut rng, 32, 0.4).unwrap();
        let (grads, _) = gradients(&params, &batch, Some(&mask)).unwrap();
        let lt = params.layout();
        for u in 0..32 {
            if !mask.keep[u] {
                // A dropped unit contributes nothing to the head weight
                // gradient.
                assert_eq!(grads.values()[lt.w3 + u], 0.0);
            }
        }
    }

    fn separable_dataset(n_per_class: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut points = Vec::new();
        for i in 0..2 * n_per_class {
            let label = (i % 2) as u8;
            let mu = if label == 1 { 0.02 } else { 0.35 };
            let v = (mu + 0.02 * rng.next_gaussian()).max(0.0);
            points.push(point(vec![v], label));
        }
        split(&points, &SplitSpec::with_seed(seed)).unwrap()
    }

    #[test]
    fn separable_reflectances_train_to_high_accuracy() {
        let dataset = separable_dataset(1000, 50);
        let config = MlpConfig::new(1);
        let mut tc = TrainConfig::new(51);
        tc.max_epochs = 50;
        let (params, history) = train(&dataset, &config, &tc).unwrap();
        assert!(
            history.val_acc[history.best_epoch] >= 0.99,
            "best val_acc {}",
            history.val_acc[history.best_epoch]
        );
        // Returned weights are the best epoch's weights.
        let (val_loss, _) = mean_val_metrics(&params, &dataset.val).unwrap();
        assert!((val_loss - history.val_loss[history.best_epoch]).abs() < 1e-12);
    }

    #[test]
    fn early_stopping_invariants_hold() {
        let dataset = separable_dataset(120, 60);
        let config = MlpConfig::new(1);
        let mut tc = TrainConfig::new(61);
        tc.max_epochs = 40;
        let (_, history) = train(&dataset, &config, &tc).unwrap();
        let best = history.val_loss[history.best_epoch];
        assert!(history.val_loss.iter().all(|&l| l >= best));
        assert!(history.epochs() <= history.best_epoch + 1 + tc.patience);
    }

    #[test]
    fn training_is_deterministic() {
        let dataset = separable_dataset(80, 70);
        let config = MlpConfig::new(1);
        let tc = {
            let mut tc = TrainConfig::new(71);
            tc.max_epochs = 8;
            tc
        };
        let (p1, h1) = train(&dataset, &config, &tc).unwrap();
        let (p2, h2) = train(&dataset, &config, &tc).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn rejects_empty_splits() {
        let config = MlpConfig::new(1);
        let tc = TrainConfig::new(1);
        let dataset = Dataset {
            train: vec![point(vec![0.1], 0)],
            val: Vec::new(),
            test: Vec::new(),
        };
        assert!(train(&dataset, &config, &tc).is_err());
    }

    fn constant_scene(value: u16, with_scl: bool) -> Scene {
        let grid = BandGrid::new(BandId::B11, 4, 3, 10, vec![value; 12]).unwrap();
        let scl = with_scl.then(|| {
            let mut codes = vec![6u16; 12];
            codes[5] = SCL_NO_DATA;
            BandGrid::new(BandId::Scl, 4, 3, 10, codes).unwrap()
        });
        Scene::new("synthetic", "2020-01-01", vec![grid], scl, None).unwrap()
    }

    #[test]
    fn map_inference_labels_water_and_invalid_pixels() {
        let dataset = separable_dataset(1000, 90);
        let config = MlpConfig::new(1);
        let mut tc = TrainConfig::new(91);
        tc.max_epochs = 50;
        let (params, _) = train(&dataset, &config, &tc).unwrap();

        // Every pixel sits at the water mean (code 200 -> 0.02).
        let scene = constant_scene(200, true);
        let mask = predict_map(&params, &scene, &[BandId::B11], 0.5).unwrap();
        assert_eq!(mask.get(2, 1), 1);
        // Index 5 = (1, 1) is the no-data pixel.
        assert_eq!(mask.labels()[5], MASK_INVALID);
        assert_eq!(
            mask.count_water(),
            11,
            "all valid pixels should be water: {:?}",
            mask.labels()
        );

        // And at the land mean (code 3500 -> 0.35).
        let land = constant_scene(3500, false);
        let mask = predict_map(&params, &land, &[BandId::B11], 0.5).unwrap();
        assert_eq!(mask.count_water(), 0);

        let again = predict_map(&params, &land, &[BandId::B11], 0.5).unwrap();
        assert_eq!(mask, again);
    }

    #[test]
    fn map_inference_validates_arguments() {
        let params = init_params(&MlpConfig::new(1), 1).unwrap();
        let scene = constant_scene(200, false);
        assert!(predict_map(&params, &scene, &[BandId::B11], 1.0).is_err());
        assert!(predict_map(&params, &scene, &[BandId::B11], 0.0).is_err());
        assert!(predict_map(&params, &scene, &[BandId::B2], 0.5).is_err());
        assert!(predict_map(&params, &scene, &[BandId::B11, BandId::B2], 0.5).is_err());
    }

    #[test]
    fn weight_file_round_trips_exactly() {
        let params = init_params(&MlpConfig::new(3), 123).unwrap();
        let mut buf = Vec::new();
        write_params(&params, &mut buf).unwrap();
        let back = read_params(&buf[..]).unwrap();
        assert_eq!(back, params);

        assert!(read_params(&b"BRNK"[..]).is_err());
        assert!(read_params(&buf[..buf.len() - 3]).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.bnet");
        save_params(&params, &path).unwrap();
        assert_eq!(load_params(&path).unwrap(), params);
    }

    #[test]
    fn history_csv_format() {
        let history = TrainHistory {
            train_loss: vec![0.684921, 0.5],
            val_loss: vec![0.7, 0.45],
            val_acc: vec![0.5, 0.975],
            best_epoch: 1,
        };
        let mut buf = Vec::new();
        history.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,train_loss,val_loss,val_acc\n\
             1,0.684921,0.700000,0.500000\n\
             2,0.500000,0.450000,0.975000\n"
        );
    }
}
