//! Unregularized logistic regression fitted by iteratively reweighted
//! least squares (Newton's method on the log-likelihood).

use super::{sigmoid, TrainData};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn score(&self, features: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(features)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

/// Mean negative log-likelihood with probabilities clamped away from 0/1
/// so perfectly separated data stays finite.
fn mean_loss(data: &TrainData, model: &LogisticModel) -> f64 {
    let mut total = 0.0;
    for i in 0..data.n {
        let p = sigmoid(model.score(data.row(i))).clamp(1e-12, 1.0 - 1e-12);
        total -= if data.y[i] == 1 {
            p.ln()
        } else {
            (1.0 - p).ln()
        };
    }
    total / data.n as f64
}

/// Solves `a x = b` in place by Gaussian elimination with partial
/// pivoting; `a` is k x k row-major. Returns None when a pivot collapses
/// (Hessian numerically singular, e.g. fully saturated probabilities).
fn solve_linear(a: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs()))
            .unwrap();
        if a[pivot_row * k + col].abs() < 1e-12 {
            return None;
        }
        if pivot_row != col {
            for c in 0..k {
                a.swap(col * k + c, pivot_row * k + c);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..k {
            let factor = a[row * k + col] / a[col * k + col];
            for c in col..k {
                a[row * k + c] -= factor * a[col * k + c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut v = b[row];
        for c in row + 1..k {
            v -= a[row * k + c] * x[c];
        }
        x[row] = v / a[row * k + row];
    }
    Some(x)
}

/// Newton iterations until the loss change drops below `tol` or `max_iter`
/// is reached. The parameter vector is (weights..., bias).
pub(crate) fn fit(data: &TrainData, tol: f64, max_iter: usize) -> LogisticModel {
    let d = data.d;
    let k = d + 1;
    let mut model = LogisticModel {
        weights: vec![0.0; d],
        bias: 0.0,
    };
    let mut loss = mean_loss(data, &model);
    for _ in 0..max_iter {
        // Hessian H = X'WX and gradient g = X'(y - p) over the augmented
        // design matrix [x, 1]; W = diag(p(1-p)).
        let mut h = vec![0.0; k * k];
        let mut g = vec![0.0; k];
        for i in 0..data.n {
            let row = data.row(i);
            let p = sigmoid(model.score(row));
            let w = (p * (1.0 - p)).max(1e-12);
            let resid = f64::from(data.y[i]) - p;
            let aug = |j: usize| if j < d { row[j] } else { 1.0 };
            for a_idx in 0..k {
                g[a_idx] += resid * aug(a_idx);
                for b_idx in a_idx..k {
                    h[a_idx * k + b_idx] += w * aug(a_idx) * aug(b_idx);
                }
            }
        }
        for a_idx in 0..k {
            for b_idx in 0..a_idx {
                h[a_idx * k + b_idx] = h[b_idx * k + a_idx];
            }
        }
        let Some(step) = solve_linear(&mut h, &mut g, k) else {
            break;
        };
        let mut next = model.clone();
        for (w, s) in next.weights.iter_mut().zip(&step) {
            *w += s;
        }
        next.bias += step[d];
        let next_loss = mean_loss(data, &next);
        if !next_loss.is_finite() {
            break;
        }
        let improvement = loss - next_loss;
        model = next;
        loss = next_loss;
        if improvement.abs() < tol {
            break;
        }
    }
    model
}
