//! k-nearest-neighbor voting: a lazy learner that stores the training set
//! and answers queries by Euclidean distance.

use crate::error::{Error, Result};

use super::TrainData;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KnnModel {
    pub k: usize,
    pub d: usize,
    /// Stored training features, row-major n x d.
    pub x: Vec<f64>,
    pub y: Vec<u8>,
}

impl KnnModel {
    fn n(&self) -> usize {
        self.y.len()
    }

    /// Fraction of the k nearest training points labeled water. Distance
    /// ties are broken toward the lower training index.
    pub fn vote_fraction(&self, features: &[f64]) -> f64 {
        let mut dists: Vec<(f64, usize)> = (0..self.n())
            .map(|i| {
                let row = &self.x[i * self.d..(i + 1) * self.d];
                let sq = row
                    .iter()
                    .zip(features)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (sq, i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let water = dists[..self.k]
            .iter()
            .filter(|&&(_, i)| self.y[i] == 1)
            .count();
        water as f64 / self.k as f64
    }
}

pub(crate) fn fit(data: &TrainData, k: usize) -> Result<KnnModel> {
    if k > data.n {
        return Err(Error::arg(format!(
            "k = {k} exceeds the {} training points",
            data.n
        )));
    }
    Ok(KnnModel {
        k,
        d: data.d,
        x: data.x.clone(),
        y: data.y.clone(),
    })
}
