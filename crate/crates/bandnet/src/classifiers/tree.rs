//! CART classification trees: Gini impurity, midpoint thresholds, grown
//! until pure. Also the shared machinery behind the random forest.

use crate::rng::Rng;

use super::TrainData;

/// Flat node storage; children refer to indices in the node vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf {
        label: u8,
        /// Fraction of training points in this leaf labeled water.
        p_water: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TreeModel {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl TreeModel {
    /// Water fraction of the leaf the features fall into.
    pub fn vote_fraction(&self, features: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { p_water, .. } => return *p_water,
                Node::Split {
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

/// Growth limits; the plain classification tree uses no depth cap and no
/// feature subsampling, the forest supplies both.
pub(crate) struct GrowConfig {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    /// Number of features examined per split (None = all, in index order).
    pub features_per_split: Option<usize>,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

fn counts_of(data: &TrainData, indices: &[usize]) -> [usize; 2] {
    let water = indices.iter().filter(|&&i| data.y[i] == 1).count();
    [indices.len() - water, water]
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Scans one feature for the best Gini gain. Thresholds are midpoints of
/// adjacent distinct sorted values; within the feature, equal gains keep
/// the smallest threshold (first found while scanning ascending values).
fn best_split_on_feature(
    data: &TrainData,
    indices: &[usize],
    feature: usize,
    parent_gini: f64,
) -> Option<BestSplit> {
    let mut order: Vec<usize> = indices.to_vec();
    order.sort_by(|&a, &b| data.row(a)[feature].total_cmp(&data.row(b)[feature]));
    let n = order.len();
    let total = counts_of(data, indices);
    let mut left = [0usize; 2];
    let mut best: Option<BestSplit> = None;
    for pos in 1..n {
        let prev = order[pos - 1];
        left[data.y[prev] as usize] += 1;
        let (a, b) = (data.row(prev)[feature], data.row(order[pos])[feature]);
        if a == b {
            continue;
        }
        let threshold = (a + b) / 2.0;
        // Guard against midpoints collapsing onto a neighbor in floats.
        if threshold <= a || threshold >= b {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let weighted = (pos as f64 * gini(left) + (n - pos) as f64 * gini(right)) / n as f64;
        let gain = parent_gini - weighted;
        if best.as_ref().is_none_or(|cur| gain > cur.gain) {
            best = Some(BestSplit {
                gain,
                feature,
                threshold,
            });
        }
    }
    best
}

/// Recursive builder. Feature candidates come in ascending index order (or
/// a seeded subsample for forests); ties across features keep the earlier
/// candidate, so lower feature indices win at equal gain.
fn grow(
    data: &TrainData,
    indices: Vec<usize>,
    depth: usize,
    config: &GrowConfig,
    mut rng: Option<&mut Rng>,
    nodes: &mut Vec<Node>,
) -> u32 {
    let counts = counts_of(data, &indices);
    let n_water = counts[1];
    let make_leaf = |nodes: &mut Vec<Node>| -> u32 {
        nodes.push(Node::Leaf {
            // Majority label; exact ties fall to non-water.
            label: u8::from(2 * n_water > indices.len()),
            p_water: n_water as f64 / indices.len() as f64,
        });
        (nodes.len() - 1) as u32
    };

    let pure = counts[0] == 0 || counts[1] == 0;
    let too_small = indices.len() < config.min_samples_split;
    let too_deep = config.max_depth.is_some_and(|cap| depth >= cap);
    if pure || too_small || too_deep {
        return make_leaf(nodes);
    }

    let candidates: Vec<usize> = match (config.features_per_split, rng.as_deref_mut()) {
        (Some(m), Some(rng)) => {
            let mut picked = rng.sample_indices(data.d, m.min(data.d));
            picked.sort_unstable();
            picked
        }
        _ => (0..data.d).collect(),
    };
    let parent_gini = gini(counts);
    let mut best: Option<BestSplit> = None;
    for feature in candidates {
        if let Some(split) = best_split_on_feature(data, &indices, feature, parent_gini) {
            if best.as_ref().is_none_or(|cur| split.gain > cur.gain) {
                best = Some(split);
            }
        }
    }
    let Some(split) = best.filter(|s| s.gain > 0.0) else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| data.row(i)[split.feature] <= split.threshold);
    // Reserve the split slot so child indices are known after recursion.
    nodes.push(Node::Leaf {
        label: 0,
        p_water: 0.0,
    });
    let this = (nodes.len() - 1) as u32;
    // Reborrow the forest RNG for each child so both subtrees share one
    // deterministic stream.
    let left = grow(data, left_idx, depth + 1, config, rng.as_deref_mut(), nodes);
    let right = grow(data, right_idx, depth + 1, config, rng, nodes);
    nodes[this as usize] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    this
}

pub(crate) fn grow_tree(
    data: &TrainData,
    indices: Vec<usize>,
    config: &GrowConfig,
    rng: Option<&mut Rng>,
) -> TreeModel {
    let mut nodes = Vec::new();
    grow(data, indices, 0, config, rng, &mut nodes);
    TreeModel {
        n_features: data.d,
        nodes,
    }
}

pub(crate) fn fit(data: &TrainData, min_samples_split: usize) -> TreeModel {
    let config = GrowConfig {
        min_samples_split,
        max_depth: None,
        features_per_split: None,
    };
    grow_tree(data, (0..data.n).collect(), &config, None)
}
