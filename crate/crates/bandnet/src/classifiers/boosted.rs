//! Gradient-boosted trees with second-order logistic loss: each round
//! fits a regression tree to the gradient/curvature statistics of the
//! running scores, with shrinkage baked into the leaf weights.

use super::{sigmoid, TrainData};

const MIN_CHILD_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BoostedTree {
    pub nodes: Vec<BNode>,
}

impl BoostedTree {
    fn eval(&self, features: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                BNode::Leaf { weight } => return *weight,
                BNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if features[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BoostedModel {
    pub n_features: usize,
    pub trees: Vec<BoostedTree>,
    /// Mean training loss after each round. Diagnostics only — not
    /// serialized, and excluded from equality so reloaded models compare
    /// equal to freshly trained ones.
    pub round_losses: Vec<f64>,
}

impl PartialEq for BoostedModel {
    fn eq(&self, other: &Self) -> bool {
        self.n_features == other.n_features && self.trees == other.trees
    }
}

impl BoostedModel {
    /// Raw additive score (log odds); the base score is zero.
    pub fn score(&self, features: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(features)).sum()
    }
}

struct SplitStats {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Structure score difference of a candidate split:
/// `0.5 * (G_L^2/(H_L+λ) + G_R^2/(H_R+λ) - G^2/(H+λ))`.
fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let term = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr))
}

fn best_split(
    data: &TrainData,
    indices: &[usize],
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
) -> Option<SplitStats> {
    let mut best: Option<SplitStats> = None;
    let mut order = indices.to_vec();
    for feature in 0..data.d {
        order.sort_by(|&a, &b| data.row(a)[feature].total_cmp(&data.row(b)[feature]));
        let (g_total, h_total) = order
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + grad[i], h + hess[i]));
        let (mut gl, mut hl) = (0.0, 0.0);
        for pos in 1..order.len() {
            let prev = order[pos - 1];
            gl += grad[prev];
            hl += hess[prev];
            let (a, b) = (data.row(prev)[feature], data.row(order[pos])[feature]);
            if a == b {
                continue;
            }
            let threshold = (a + b) / 2.0;
            if threshold <= a || threshold >= b {
                continue;
            }
            let (gr, hr) = (g_total - gl, h_total - hl);
            if hl < MIN_CHILD_WEIGHT || hr < MIN_CHILD_WEIGHT {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, lambda);
            if best.as_ref().is_none_or(|cur| gain > cur.gain) {
                best = Some(SplitStats {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn grow(
    data: &TrainData,
    indices: Vec<usize>,
    depth: usize,
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    lambda: f64,
    shrinkage: f64,
    nodes: &mut Vec<BNode>,
) -> u32 {
    let make_leaf = |nodes: &mut Vec<BNode>, idx: &[usize]| -> u32 {
        let g: f64 = idx.iter().map(|&i| grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| hess[i]).sum();
        nodes.push(BNode::Leaf {
            weight: shrinkage * (-g / (h + lambda)),
        });
        (nodes.len() - 1) as u32
    };
    if depth >= max_depth || indices.len() < 2 {
        return make_leaf(nodes, &indices);
    }
    let Some(split) = best_split(data, &indices, grad, hess, lambda).filter(|s| s.gain > 0.0)
    else {
        return make_leaf(nodes, &indices);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| data.row(i)[split.feature] <= split.threshold);
    nodes.push(BNode::Leaf { weight: 0.0 });
    let this = (nodes.len() - 1) as u32;
    let left = grow(
        data,
        left_idx,
        depth + 1,
        grad,
        hess,
        max_depth,
        lambda,
        shrinkage,
        nodes,
    );
    let right = grow(
        data,
        right_idx,
        depth + 1,
        grad,
        hess,
        max_depth,
        lambda,
        shrinkage,
        nodes,
    );
    nodes[this as usize] = BNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    this
}

fn mean_log_loss(scores: &[f64], y: &[u8]) -> f64 {
    let mut total = 0.0;
    for (&f, &label) in scores.iter().zip(y) {
        let p = sigmoid(f).clamp(1e-12, 1.0 - 1e-12);
        total -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / y.len() as f64
}

pub(crate) fn fit(
    data: &TrainData,
    rounds: usize,
    learning_rate: f64,
    max_depth: usize,
    lambda: f64,
) -> BoostedModel {
    let mut scores = vec![0.0f64; data.n];
    let mut grad = vec![0.0f64; data.n];
    let mut hess = vec![0.0f64; data.n];
    let mut trees = Vec::with_capacity(rounds);
    let mut round_losses = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        for i in 0..data.n {
            let p = sigmoid(scores[i]);
            grad[i] = p - f64::from(data.y[i]);
            hess[i] = p * (1.0 - p);
        }
        let mut nodes = Vec::new();
        grow(
            data,
            (0..data.n).collect(),
            0,
            &grad,
            &hess,
            max_depth,
            lambda,
            learning_rate,
            &mut nodes,
        );
        let tree = BoostedTree { nodes };
        for (i, score) in scores.iter_mut().enumerate() {
            *score += tree.eval(data.row(i));
        }
        round_losses.push(mean_log_loss(&scores, &data.y));
        trees.push(tree);
    }
    BoostedModel {
        n_features: data.d,
        trees,
        round_losses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_data::{point, two_gaussians};
    use crate::classifiers::{fit as fit_spec, ClassifierSpec, ModelParams, Variant};

    fn boosted(
        train: &[crate::sampling::SamplePoint],
        rounds: usize,
        max_depth: usize,
    ) -> (crate::classifiers::FittedModel, BoostedModel) {
        let variant = Variant::GradientBoostedTrees {
            rounds,
            learning_rate: 0.3,
            max_depth,
            lambda: 1.0,
        };
        let fitted = fit_spec(&ClassifierSpec::new(variant, 0), train).unwrap();
        let ModelParams::Boosted(m) = fitted.params.clone() else {
            unreachable!()
        };
        (fitted, m)
    }

    #[test]
    fn first_round_leaf_weights_match_closed_form() {
        // Perfectly separated 50/50: before the first round p = 0.5, so
        // each side has G = ±25, H = 12.5, leaf = lr * 25 / 13.5.
        let mut train = Vec::new();
        for i in 0..50 {
            train.push(point(vec![0.02 + 1e-4 * i as f64], 1, i));
            train.push(point(vec![0.30 + 1e-4 * i as f64], 0, 50 + i));
        }
        let (fitted, _) = boosted(&train, 1, 6);
        let expected = 0.3 * 25.0 / 13.5;
        assert!((fitted.decision_value(&[0.02]).unwrap() - expected).abs() < 1e-12);
        assert!((fitted.decision_value(&[0.30]).unwrap() + expected).abs() < 1e-12);
    }

    #[test]
    fn training_loss_never_increases() {
        let train = two_gaussians(0.28, 0.10, 0.07, 200, 51);
        let (_, model) = boosted(&train, 60, 6);
        assert_eq!(model.round_losses.len(), 60);
        assert!(model.round_losses[0] < (2.0f64).ln());
        for w in model.round_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn depth_cap_yields_stumps() {
        let train = two_gaussians(0.30, 0.08, 0.06, 100, 52);
        let (_, model) = boosted(&train, 5, 1);
        for tree in &model.trees {
            assert!(tree.nodes.len() <= 3);
        }
    }

    #[test]
    fn learns_a_nonlinear_band() {
        // Water only inside an interval: needs at least two splits.
        let mut train = Vec::new();
        for i in 0..300 {
            let x = 0.001 * i as f64; // 0.0 .. 0.3
            let label = u8::from((0.10..0.20).contains(&x));
            train.push(point(vec![x], label, i));
        }
        let (fitted, _) = boosted(&train, 30, 6);
        assert_eq!(fitted.predict(&[0.15]).unwrap(), 1);
        assert_eq!(fitted.predict(&[0.05]).unwrap(), 0);
        assert_eq!(fitted.predict(&[0.25]).unwrap(), 0);
    }

    #[test]
    fn reloaded_equality_ignores_diagnostics() {
        let train = two_gaussians(0.30, 0.08, 0.05, 80, 53);
        let (_, a) = boosted(&train, 10, 6);
        let mut b = a.clone();
        b.round_losses.clear();
        assert_eq!(a, b);
    }
}
