//! Single classification tree with Gini-impurity splits.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hyperparameters shared by tree growth inside the forest trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered per split, in (0, 1].
    pub feature_fraction: f64,
    /// Cap on evaluated split thresholds per feature per node; larger nodes
    /// fall back to quantile candidates.
    pub max_split_candidates: usize,
}

impl Default for TreeParams {
    fn default() -> TreeParams {
        TreeParams {
            max_depth: 12,
            min_leaf: 2,
            feature_fraction: 0.5,
            max_split_candidates: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

/// A trained tree: an arena of nodes rooted at index 0. Every internal node
/// references a feature index inside the training schema and every path ends
/// at a leaf holding the class-count histogram of its training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_classes: usize,
}

impl DecisionTree {
    /// Grow a tree over `rows[indices]`. `labels` holds class indices in
    /// `0..n_classes`.
    pub fn grow(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        indices: &[usize],
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> DecisionTree {
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_classes,
        };
        let mut scratch = indices.to_vec();
        tree.grow_node(rows, labels, &mut scratch, 0, params, rng);
        tree
    }

    fn grow_node(
        &mut self,
        rows: &[Vec<f64>],
        labels: &[usize],
        indices: &mut [usize],
        depth: usize,
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> usize {
        let counts = histogram(labels, indices, self.n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= params.max_depth || indices.len() < 2 * params.min_leaf || pure {
            return self.push_leaf(counts);
        }
        let split = match best_gini_split(rows, labels, indices, self.n_classes, params, rng) {
            Some(s) => s,
            None => return self.push_leaf(counts),
        };
        let mid = partition(rows, indices, split.feature, split.threshold);
        if mid < params.min_leaf || indices.len() - mid < params.min_leaf {
            return self.push_leaf(counts);
        }
        let node_idx = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let (left_slice, right_slice) = indices.split_at_mut(mid);
        let left = self.grow_node(rows, labels, left_slice, depth + 1, params, rng);
        let right = self.grow_node(rows, labels, right_slice, depth + 1, params, rng);
        if let TreeNode::Split {
            left: l, right: r, ..
        } = &mut self.nodes[node_idx]
        {
            *l = left;
            *r = right;
        }
        node_idx
    }

    fn push_leaf(&mut self, counts: Vec<u64>) -> usize {
        self.nodes.push(TreeNode::Leaf { counts });
        self.nodes.len() - 1
    }

    /// Class-count histogram of the leaf reached by `x`.
    pub fn leaf_counts<'a>(&'a self, x: &[f64]) -> &'a [u64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { counts } => return counts,
            }
        }
    }

    /// Leaf histogram normalized to a distribution.
    pub fn leaf_distribution(&self, x: &[f64]) -> Vec<f64> {
        let counts = self.leaf_counts(x);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return vec![1.0 / self.n_classes as f64; self.n_classes];
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }
}

fn histogram(labels: &[usize], indices: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &i in indices {
        counts[labels[i]] += 1;
    }
    counts
}

fn gini(counts: &[u64], total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

/// Pick the (feature, threshold) with the largest Gini impurity decrease over
/// a random feature subset. Returns None when no split improves impurity.
fn best_gini_split(
    rows: &[Vec<f64>],
    labels: &[usize],
    indices: &[usize],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut impl Rng,
) -> Option<SplitChoice> {
    let d = rows[0].len();
    let m = ((params.feature_fraction * d as f64).ceil() as usize).clamp(1, d);
    let mut features: Vec<usize> = (0..d).collect();
    features.partial_shuffle(rng, m);
    features.truncate(m);

    let n = indices.len() as f64;
    let parent_counts = histogram(labels, indices, n_classes);
    let parent_gini = gini(&parent_counts, n);

    let mut best: Option<(f64, SplitChoice)> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
    for &feature in &features {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (rows[i][feature], labels[i])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if pairs[0].0 == pairs[pairs.len() - 1].0 {
            continue;
        }

        // Boundary positions between distinct consecutive values; thinned to
        // quantile candidates on large nodes.
        let mut boundaries: Vec<usize> = (1..pairs.len())
            .filter(|&i| pairs[i - 1].0 < pairs[i].0)
            .collect();
        if boundaries.len() > params.max_split_candidates {
            let step = boundaries.len() as f64 / params.max_split_candidates as f64;
            boundaries = (0..params.max_split_candidates)
                .map(|k| boundaries[(k as f64 * step) as usize])
                .collect();
        }

        let mut left_counts = vec![0u64; n_classes];
        let mut pos = 0;
        for &b in &boundaries {
            while pos < b {
                left_counts[pairs[pos].1] += 1;
                pos += 1;
            }
            let n_left = b as f64;
            let n_right = n - n_left;
            if (b) < params.min_leaf || (indices.len() - b) < params.min_leaf {
                continue;
            }
            let right_counts: Vec<u64> = parent_counts
                .iter()
                .zip(&left_counts)
                .map(|(p, l)| p - l)
                .collect();
            let weighted = (n_left / n) * gini(&left_counts, n_left)
                + (n_right / n) * gini(&right_counts, n_right);
            let gain = parent_gini - weighted;
            if gain > 1e-12 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                let threshold = midpoint(pairs[b - 1].0, pairs[b].0);
                best = Some((gain, SplitChoice { feature, threshold }));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Threshold between two adjacent distinct values such that `left <= t < right`.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

/// Partition `indices` in place: rows with `x[feature] <= threshold` first.
/// Returns the boundary position. Order within each side is preserved so the
/// recursion stays deterministic.
fn partition(rows: &[Vec<f64>], indices: &mut [usize], feature: usize, threshold: f64) -> usize {
    let mut reordered: Vec<usize> = Vec::with_capacity(indices.len());
    reordered.extend(
        indices
            .iter()
            .copied()
            .filter(|&i| rows[i][feature] <= threshold),
    );
    let mid = reordered.len();
    reordered.extend(
        indices
            .iter()
            .copied()
            .filter(|&i| rows[i][feature] > threshold),
    );
    indices.copy_from_slice(&reordered);
    mid
}
