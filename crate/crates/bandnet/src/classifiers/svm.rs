//! RBF-kernel support vector machine solved by sequential minimal
//! optimization with maximal-violating-pair working-set selection.
//!
//! The dual problem `min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0` with
//! `Q_ij = y_i y_j K(x_i, x_j)` is solved two variables at a time; kernel
//! rows are memoized in a bounded least-recently-used cache.

use crate::error::Result;
use crate::rng::Rng;

use std::collections::HashMap;

use super::TrainData;

const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;
/// Kernel cache budget; rows are evicted least-recently-used beyond it.
const CACHE_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SvmModel {
    pub d: usize,
    pub gamma: f64,
    pub bias: f64,
    /// alpha_i * y_i per support vector.
    pub coef: Vec<f64>,
    /// Support vectors, row-major n_sv x d.
    pub support: Vec<f64>,
}

impl SvmModel {
    pub fn score(&self, features: &[f64]) -> f64 {
        let n_sv = self.coef.len();
        let mut sum = self.bias;
        for s in 0..n_sv {
            let sv = &self.support[s * self.d..(s + 1) * self.d];
            sum += self.coef[s] * rbf(sv, features, self.gamma);
        }
        sum
    }
}

#[inline]
fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// The `scale` heuristic: 1 / (d * variance of all feature entries);
/// falls back to 1/d when the data has no spread at all.
fn gamma_scale(x: &[f64], d: usize) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 1e-24 {
        1.0 / (d as f64 * var)
    } else {
        1.0 / d as f64
    }
}

/// LRU-bounded kernel row cache.
struct Kernel<'a> {
    x: &'a [f64],
    n: usize,
    d: usize,
    gamma: f64,
    rows: HashMap<usize, (u64, Vec<f64>)>,
    max_rows: usize,
    tick: u64,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a [f64], n: usize, d: usize, gamma: f64, max_bytes: usize) -> Kernel<'a> {
        let max_rows = (max_bytes / (8 * n)).max(2);
        Kernel {
            x,
            n,
            d,
            gamma,
            rows: HashMap::new(),
            max_rows,
            tick: 0,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.tick += 1;
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.max_rows {
                let oldest = *self
                    .rows
                    .iter()
                    .min_by_key(|(_, (tick, _))| *tick)
                    .map(|(k, _)| k)
                    .expect("cache not empty");
                self.rows.remove(&oldest);
            }
            let xi = &self.x[i * self.d..(i + 1) * self.d];
            let row: Vec<f64> = (0..self.n)
                .map(|t| rbf(xi, &self.x[t * self.d..(t + 1) * self.d], self.gamma))
                .collect();
            self.rows.insert(i, (self.tick, row));
        }
        let entry = self.rows.get_mut(&i).expect("row just inserted");
        entry.0 = self.tick;
        &entry.1
    }
}

/// Maximal violating pair: the most violated coordinate that can still
/// move up and the one that can still move down. Returns None once the
/// pair violates KKT by no more than the tolerance.
fn select_working_set(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<(usize, usize)> {
    let mut up_value = f64::NEG_INFINITY;
    let mut up_idx = None;
    let mut low_value = f64::NEG_INFINITY;
    let mut low_idx = None;
    for t in 0..alpha.len() {
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up && -y[t] * grad[t] > up_value {
            up_value = -y[t] * grad[t];
            up_idx = Some(t);
        }
        if in_low && y[t] * grad[t] > low_value {
            low_value = y[t] * grad[t];
            low_idx = Some(t);
        }
    }
    match (up_idx, low_idx) {
        (Some(i), Some(j)) if up_value + low_value > KKT_TOL => Some((i, j)),
        _ => None,
    }
}

pub(crate) fn fit(data: &TrainData, c: f64, max_points: usize, seed: u64) -> Result<SvmModel> {
    // Seeded subsample keeps the quadratic solve tractable on big pools.
    let owned;
    let sub: &TrainData = if data.n > max_points {
        let mut rng = Rng::new(seed);
        let picked = rng.sample_indices(data.n, max_points);
        let mut x = Vec::with_capacity(max_points * data.d);
        let mut y = Vec::with_capacity(max_points);
        for &i in &picked {
            x.extend_from_slice(data.row(i));
            y.push(data.y[i]);
        }
        owned = TrainData {
            x,
            y,
            n: max_points,
            d: data.d,
        };
        &owned
    } else {
        data
    };
    if sub.class_counts().contains(&0) {
        return Err(crate::error::Error::DegenerateData(
            "SVM subsample lost one class; raise max_points".to_string(),
        ));
    }

    let n = sub.n;
    let gamma = gamma_scale(&sub.x, sub.d);
    let y: Vec<f64> = sub
        .y
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let mut kernel = Kernel::new(&sub.x, n, sub.d, gamma, CACHE_BYTES);

    let max_iter = 100 * n;
    for _ in 0..max_iter {
        let Some((i, j)) = select_working_set(&alpha, &grad, &y, c) else {
            break;
        };
        // Q entries for the pair; K(x,x) = 1 for the RBF kernel.
        let kij = kernel.row(i)[j];
        let qij = y[i] * y[j] * kij;
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (2.0 + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            let quad = (2.0 - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (delta_i, delta_j) = (alpha[i] - old_ai, alpha[j] - old_aj);
        if delta_i == 0.0 && delta_j == 0.0 {
            break; // numerically stuck pair; KKT gap is within noise
        }
        {
            let row = kernel.row(i);
            for t in 0..n {
                grad[t] += y[t] * y[i] * row[t] * delta_i;
            }
        }
        {
            let row = kernel.row(j);
            for t in 0..n {
                grad[t] += y[t] * y[j] * row[t] * delta_j;
            }
        }
    }

    // Bias from the KKT conditions: average y*G over free vectors, or the
    // midpoint of the bound-derived bracket when none are free.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let mut coef = Vec::new();
    let mut support = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            coef.push(alpha[t] * y[t]);
            support.extend_from_slice(sub.row(t));
        }
    }
    Ok(SvmModel {
        d: sub.d,
        gamma,
        bias: -rho,
        coef,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_data::{point, two_gaussians};
    use crate::classifiers::{fit as fit_spec, ClassifierSpec, ModelParams, Variant};
    use crate::sampling::SamplePoint;

    fn svm(train: &[SamplePoint]) -> (crate::classifiers::FittedModel, SvmModel) {
        let fitted = fit_spec(&ClassifierSpec::new(Variant::svm_rbf(), 0), train).unwrap();
        let ModelParams::Svm(m) = fitted.params.clone() else {
            unreachable!()
        };
        (fitted, m)
    }

    /// Four clusters at the corners of the unit square, diagonal corners
    /// sharing a class: not linearly separable.
    fn xor_points() -> Vec<SamplePoint> {
        let offsets = [(0.0, 0.0), (0.05, 0.0), (0.0, 0.05), (0.05, 0.05)];
        let corners = [
            ((0.0, 0.0), 0u8),
            ((1.0, 1.0), 0u8),
            ((0.0, 1.0), 1u8),
            ((1.0, 0.0), 1u8),
        ];
        let mut points = Vec::new();
        for (ci, ((cx, cy), label)) in corners.iter().enumerate() {
            for (oi, (ox, oy)) in offsets.iter().enumerate() {
                points.push(point(vec![cx + ox, cy + oy], *label, ci * 4 + oi));
            }
        }
        points
    }

    #[test]
    fn gamma_matches_scale_heuristic() {
        let x = vec![0.0, 1.0, 2.0, 3.0]; // var = 1.25
        assert!((gamma_scale(&x, 1) - 1.0 / 1.25).abs() < 1e-12);
        assert_eq!(gamma_scale(&[0.5; 8], 2), 0.5); // no spread -> 1/d
    }

    #[test]
    fn kernel_cache_eviction_is_transparent() {
        let x: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let (n, d, gamma) = (6, 2, 0.7);
        let mut cache = Kernel::new(&x, n, d, gamma, 8 * n * 2); // 2 rows max
        for &i in &[0, 1, 2, 3, 0, 5, 2, 4, 1, 0] {
            let row = cache.row(i).to_vec();
            for t in 0..n {
                let direct = rbf(&x[i * d..(i + 1) * d], &x[t * d..(t + 1) * d], gamma);
                assert_eq!(row[t], direct);
            }
        }
        assert!(cache.rows.len() <= 2);
    }

    #[test]
    fn separates_xor_clusters() {
        let points = xor_points();
        let (fitted, model) = svm(&points);
        for p in &points {
            assert_eq!(
                fitted.predict(&p.features).unwrap(),
                p.label,
                "misclassified {:?}",
                p.features
            );
        }
        // The balanced dual keeps sum(alpha_i y_i) = 0.
        let net: f64 = model.coef.iter().sum();
        assert!(net.abs() < 1e-9);
    }

    /// Projected-gradient oracle for the dual: maximize
    /// `W(a) = e'a - 1/2 a'Qa` over the box intersected with `y'a = 0`,
    /// projecting via bisection on the equality multiplier.
    fn oracle_dual(points: &[SamplePoint], gamma: f64, c: f64, iters: usize) -> (Vec<f64>, f64) {
        let n = points.len();
        let y: Vec<f64> = points
            .iter()
            .map(|p| if p.label == 1 { 1.0 } else { -1.0 })
            .collect();
        let q: Vec<f64> = (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                y[i] * y[j] * rbf(&points[i].features, &points[j].features, gamma)
            })
            .collect();
        let project = |v: &[f64]| -> Vec<f64> {
            let (mut lo, mut hi) = (-100.0f64, 100.0f64);
            for _ in 0..200 {
                let lambda = 0.5 * (lo + hi);
                let s: f64 = (0..n)
                    .map(|t| (v[t] + lambda * y[t]).clamp(0.0, c) * y[t])
                    .sum();
                if s > 0.0 {
                    hi = lambda;
                } else {
                    lo = lambda;
                }
            }
            let lambda = 0.5 * (lo + hi);
            (0..n)
                .map(|t| (v[t] + lambda * y[t]).clamp(0.0, c))
                .collect()
        };
        let mut alpha = project(&vec![0.0; n]);
        for _ in 0..iters {
            let step: Vec<f64> = (0..n)
                .map(|t| {
                    let qa: f64 = (0..n).map(|s| q[t * n + s] * alpha[s]).sum();
                    alpha[t] + 0.05 * (1.0 - qa)
                })
                .collect();
            alpha = project(&step);
        }
        let mut obj = alpha.iter().sum::<f64>();
        for i in 0..n {
            for j in 0..n {
                obj -= 0.5 * alpha[i] * q[i * n + j] * alpha[j];
            }
        }
        (alpha, obj)
    }

    #[test]
    fn smo_reaches_the_dual_optimum() {
        let points = xor_points();
        let (_, model) = svm(&points);
        // Objective of the SMO solution, reconstructed from coefficients.
        let mut smo_obj = model.coef.iter().map(|c| c.abs()).sum::<f64>();
        let n_sv = model.coef.len();
        for i in 0..n_sv {
            for j in 0..n_sv {
                let k = rbf(
                    &model.support[i * model.d..(i + 1) * model.d],
                    &model.support[j * model.d..(j + 1) * model.d],
                    model.gamma,
                );
                smo_obj -= 0.5 * model.coef[i] * model.coef[j] * k;
            }
        }
        let (_, oracle_obj) = oracle_dual(&points, model.gamma, 1.0, 20_000);
        assert!(
            (smo_obj - oracle_obj).abs() <= 1e-3 * (1.0 + oracle_obj.abs()),
            "SMO objective {smo_obj} vs oracle {oracle_obj}"
        );
    }

    #[test]
    fn clean_clusters_put_boundary_between_them() {
        let train = two_gaussians(0.35, 0.05, 0.02, 200, 71);
        let (fitted, _) = svm(&train);
        let mut correct = 0;
        for p in &train {
            correct += usize::from(fitted.predict(&p.features).unwrap() == p.label);
        }
        assert!(correct as f64 / train.len() as f64 >= 0.99);
        assert_eq!(fitted.predict(&[0.05]).unwrap(), 1);
        assert_eq!(fitted.predict(&[0.35]).unwrap(), 0);
    }

    #[test]
    fn oversized_pools_are_subsampled_deterministically() {
        let train = two_gaussians(0.30, 0.08, 0.05, 400, 72);
        let variant = Variant::SvmRbf {
            c: 1.0,
            max_points: 100,
        };
        let a = fit_spec(&ClassifierSpec::new(variant.clone(), 5), &train).unwrap();
        let b = fit_spec(&ClassifierSpec::new(variant.clone(), 5), &train).unwrap();
        assert_eq!(a.params, b.params);
        let ModelParams::Svm(m) = &a.params else {
            unreachable!()
        };
        assert!(m.coef.len() <= 100);
        let mut correct = 0;
        for p in &train {
            correct += usize::from(a.predict(&p.features).unwrap() == p.label);
        }
        assert!(correct as f64 / train.len() as f64 >= 0.95);
    }
}
