//! Random forest: bagged CART trees with per-split feature subsampling.
//! Every tree derives its own PRNG stream from the `ClassifierSpec` seed,
//! so the ensemble is identical however the trees are scheduled.

use rayon::prelude::*;

use crate::rng::{derive_seed, Rng};

use super::tree::{grow_tree, GrowConfig, TreeModel};
use super::TrainData;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ForestModel {
    pub n_features: usize,
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    /// Fraction of trees voting water.
    pub fn vote_fraction(&self, features: &[f64]) -> f64 {
        let water = self
            .trees
            .iter()
            .filter(|t| t.vote_fraction(features) > 0.5)
            .count();
        water as f64 / self.trees.len() as f64
    }
}

pub(crate) fn fit(data: &TrainData, n_estimators: usize, seed: u64) -> ForestModel {
    let features_per_split = (data.d as f64).sqrt().ceil() as usize;
    let config = GrowConfig {
        min_samples_split: 2,
        max_depth: None,
        features_per_split: Some(features_per_split),
    };
    let trees: Vec<TreeModel> = (0..n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::new(derive_seed(seed, t as u64));
            // Bootstrap: n draws with replacement.
            let indices: Vec<usize> = (0..data.n)
                .map(|_| rng.next_below(data.n as u64) as usize)
                .collect();
            grow_tree(data, indices, &config, Some(&mut rng))
        })
        .collect();
    ForestModel {
        n_features: data.d,
        trees,
    }
}
