//! Linear classifier trained by per-sample stochastic gradient descent on
//! the modified-Huber loss, with an L1 penalty applied by truncated
//! gradient after each step.

use crate::rng::Rng;

use super::TrainData;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SgdModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SgdModel {
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

/// Modified-Huber loss on the margin z = y * f(x), y in {-1, +1}:
/// zero beyond z >= 1, quadratic (1 - z)^2 on [-1, 1), linear -4z below.
#[allow(dead_code)] // documented alongside its gradient; used in tests
pub(crate) fn modified_huber_loss(z: f64) -> f64 {
    if z >= 1.0 {
        0.0
    } else if z >= -1.0 {
        (1.0 - z) * (1.0 - z)
    } else {
        -4.0 * z
    }
}

/// d(loss)/dz for the margin; multiply by y for the score gradient.
pub(crate) fn modified_huber_dz(z: f64) -> f64 {
    if z >= 1.0 {
        0.0
    } else if z >= -1.0 {
        -2.0 * (1.0 - z)
    } else {
        -4.0
    }
}

pub(crate) fn fit(data: &TrainData, epochs: usize, alpha: f64, eta0: f64, seed: u64) -> SgdModel {
    let mut model = SgdModel {
        weights: vec![0.0; data.d],
        bias: 0.0,
    };
    let mut rng = Rng::new(seed);
    let mut order: Vec<usize> = (0..data.n).collect();
    let mut step: u64 = 0;
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            step += 1;
            let eta = eta0 / (step as f64).sqrt();
            let row = data.row(i);
            let y = if data.y[i] == 1 { 1.0 } else { -1.0 };
            let z = y * model.score(row);
            let dz = modified_huber_dz(z);
            if dz != 0.0 {
                let df = dz * y;
                for (w, &x) in model.weights.iter_mut().zip(row) {
                    *w -= eta * df * x;
                }
                model.bias -= eta * df;
            }
            // Truncated-gradient L1: shrink weights toward zero, clipping
            // at zero; the bias is never penalized.
            if alpha > 0.0 {
                let shrink = eta * alpha;
                for w in &mut model.weights {
                    *w = w.signum() * (w.abs() - shrink).max(0.0);
                }
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_data::{point, two_gaussians};
    use crate::classifiers::{fit as fit_spec, ClassifierSpec, Variant};

    #[test]
    fn loss_branches_and_continuity() {
        assert_eq!(modified_huber_loss(1.5), 0.0);
        assert_eq!(modified_huber_loss(0.5), 0.25);
        assert_eq!(modified_huber_loss(-2.0), 8.0);
        assert_eq!(modified_huber_dz(2.0), 0.0);
        assert_eq!(modified_huber_dz(0.0), -2.0);
        // The quadratic and linear branches join smoothly at z = -1.
        assert_eq!(modified_huber_loss(-1.0), 4.0);
        assert_eq!(modified_huber_dz(-1.0), -4.0);
        assert_eq!(modified_huber_dz(-1.0 - 1e-9), -4.0);
    }

    #[test]
    fn single_step_hand_computed() {
        // One point x = 1, y = +1 from zero weights: z = 0, dz = -2,
        // df = -2, eta = 0.01, so w = b = 0.02 before the L1 shrink of
        // eta * alpha = 1e-6 (weights only).
        let data = TrainData::from_points(&[point(vec![1.0], 1, 0)]).unwrap();
        let model = fit(&data, 1, 1e-4, 0.01, 0);
        assert!((model.weights[0] - (0.02 - 1e-6)).abs() < 1e-15);
        assert!((model.bias - 0.02).abs() < 1e-15);
    }

    #[test]
    fn l1_keeps_noise_weights_small() {
        // Feature 0 is pure noise, feature 1 carries the signal; the L1
        // penalty should leave the noise weight well below the signal one.
        let mut train = Vec::new();
        let noise = [0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4];
        for i in 0..400 {
            let label = (i % 2) as u8;
            let signal = if label == 1 { 0.05 } else { 0.35 };
            // Both labels in a pair share one noise value, so feature 0
            // carries no class information at all.
            train.push(point(vec![noise[(i / 2) % noise.len()], signal], label, i));
        }
        let data = TrainData::from_points(&train).unwrap();
        let model = fit(&data, 25, 1e-4, 0.01, 3);
        assert!(model.weights[0].abs() < model.weights[1].abs());
    }

    #[test]
    fn separates_clean_classes() {
        let train = two_gaussians(0.35, 0.05, 0.02, 300, 61);
        let spec = ClassifierSpec::new(Variant::sgd_linear(), 4);
        let model = fit_spec(&spec, &train).unwrap();
        let mut correct = 0;
        for p in &train {
            correct += usize::from(model.predict(&p.features).unwrap() == p.label);
        }
        assert!(correct as f64 / train.len() as f64 >= 0.95);
        // Water lies below non-water, so the slope is negative.
        assert!(model.decision_value(&[0.0]).unwrap() > model.decision_value(&[0.5]).unwrap());
    }

    #[test]
    fn epoch_order_depends_on_seed_only() {
        let train = two_gaussians(0.30, 0.10, 0.06, 150, 62);
        let data = TrainData::from_points(&train).unwrap();
        let a = fit(&data, 5, 1e-4, 0.01, 7);
        let b = fit(&data, 5, 1e-4, 0.01, 7);
        let c = fit(&data, 5, 1e-4, 0.01, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
