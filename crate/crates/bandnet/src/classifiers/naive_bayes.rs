//! Gaussian naive Bayes: per-class, per-feature normal densities with
//! variance smoothing against zero-variance features.

use super::TrainData;

/// Fraction of the largest feature variance added to every class variance.
const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GnbModel {
    pub n_features: usize,
    /// Class priors; zero when the class was absent from training.
    pub priors: [f64; 2],
    /// Per-class feature means, row-major [class][feature].
    pub means: Vec<f64>,
    /// Per-class smoothed feature variances, same layout.
    pub variances: Vec<f64>,
}

impl GnbModel {
    /// Joint log density ln p(x, class); -inf for an absent class.
    fn joint_log_likelihood(&self, features: &[f64], class: usize) -> f64 {
        if self.priors[class] == 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut ll = self.priors[class].ln();
        for (j, &x) in features.iter().enumerate() {
            let mu = self.means[class * self.n_features + j];
            let var = self.variances[class * self.n_features + j];
            ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu).powi(2) / (2.0 * var);
        }
        ll
    }

    /// Normalized posterior probabilities; sums to 1.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn posterior(&self, features: &[f64]) -> [f64; 2] {
        let l0 = self.joint_log_likelihood(features, 0);
        let l1 = self.joint_log_likelihood(features, 1);
        let m = l0.max(l1);
        let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
        [e0 / (e0 + e1), e1 / (e0 + e1)]
    }

    /// Log odds ln p(water|x) - ln p(non-water|x); the decision score.
    pub fn log_odds(&self, features: &[f64]) -> f64 {
        self.joint_log_likelihood(features, 1) - self.joint_log_likelihood(features, 0)
    }
}

pub(crate) fn fit(data: &TrainData) -> GnbModel {
    let d = data.d;
    let counts = data.class_counts();
    let mut means = vec![0.0; 2 * d];
    let mut variances = vec![0.0; 2 * d];
    for i in 0..data.n {
        let c = data.y[i] as usize;
        for (j, &x) in data.row(i).iter().enumerate() {
            means[c * d + j] += x;
        }
    }
    for c in 0..2 {
        if counts[c] == 0 {
            continue;
        }
        for j in 0..d {
            means[c * d + j] /= counts[c] as f64;
        }
    }
    for i in 0..data.n {
        let c = data.y[i] as usize;
        for (j, &x) in data.row(i).iter().enumerate() {
            variances[c * d + j] += (x - means[c * d + j]).powi(2);
        }
    }
    // Population variance per class, then smoothing proportional to the
    // widest overall feature spread so no variance is exactly zero.
    let mut max_total_var = 0.0f64;
    for j in 0..d {
        let mean: f64 = (0..data.n).map(|i| data.row(i)[j]).sum::<f64>() / data.n as f64;
        let var: f64 = (0..data.n)
            .map(|i| (data.row(i)[j] - mean).powi(2))
            .sum::<f64>()
            / data.n as f64;
        max_total_var = max_total_var.max(var);
    }
    let epsilon = (VAR_SMOOTHING * max_total_var).max(f64::MIN_POSITIVE);
    for c in 0..2 {
        for j in 0..d {
            variances[c * d + j] = if counts[c] == 0 {
                epsilon
            } else {
                variances[c * d + j] / counts[c] as f64 + epsilon
            };
        }
    }
    GnbModel {
        n_features: d,
        priors: [
            counts[0] as f64 / data.n as f64,
            counts[1] as f64 / data.n as f64,
        ],
        means,
        variances,
    }
}
