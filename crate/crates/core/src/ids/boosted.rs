//! Stagewise boosted trees on softmax log-loss.
//!
//! Each stage fits one regression tree per class to the gradient/hessian of
//! the current predictions, with an L2 penalty on leaf values. The loss
//! penalty printed in the source material folds into the leaf solution
//! `w = -G / (H + lambda)` and the split gain; it is applied as a separate
//! regularizer, not inside the loss arguments. A stage whose full step would
//! raise the training loss is damped (halving its weight) until the loss is
//! non-increasing, so the recorded per-stage loss sequence is monotone.

use super::IdsError;
use crate::dataset::LabeledDataset;
use crate::label::ClassLabel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedParams {
    pub n_stages: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Shrinkage in (0, 1].
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Fraction of features considered per split, in (0, 1].
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for BoostedParams {
    fn default() -> BoostedParams {
        BoostedParams {
            n_stages: 50,
            max_depth: 4,
            min_leaf: 2,
            learning_rate: 0.3,
            lambda: 1.0,
            feature_fraction: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                RegNode::Split {
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
                RegNode::Leaf { value } => return *value,
            }
        }
    }
}

/// One boosting stage: a tree per class and the accepted step weight
/// (learning rate after any damping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub weight: f64,
    pub trees: Vec<RegTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub feature_schema: Vec<String>,
    pub classes: Vec<ClassLabel>,
    pub params: BoostedParams,
    /// Per-class score offsets: log of the (clamped) class priors.
    pub base_scores: Vec<f64>,
    pub stages: Vec<BoostStage>,
    /// Training log-loss after each stage, first entry is the prior-only loss.
    pub train_loss: Vec<f64>,
}

impl BoostedModel {
    pub fn train(data: &LabeledDataset, params: &BoostedParams) -> Result<BoostedModel, IdsError> {
        if data.is_empty() {
            return Err(IdsError::EmptyDataset);
        }
        if params.n_stages == 0 {
            return Err(IdsError::InvalidParams("n_stages must be >= 1".into()));
        }
        if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
            return Err(IdsError::InvalidParams(
                "learning_rate must be in (0, 1]".into(),
            ));
        }
        let classes = data.classes.clone();
        let k = classes.len();
        let n = data.len();
        let class_index = |l: ClassLabel| classes.iter().position(|&c| c == l).unwrap();
        let labels: Vec<usize> = data.labels.iter().map(|&l| class_index(l)).collect();

        let mut base_scores = vec![0.0; k];
        for &y in &labels {
            base_scores[y] += 1.0;
        }
        for b in base_scores.iter_mut() {
            *b = (*b / n as f64).max(1e-6).ln();
        }

        // scores[i][c]
        let mut scores: Vec<Vec<f64>> = vec![base_scores.clone(); n];
        let mut loss = log_loss(&scores, &labels);
        let mut train_loss = vec![loss];
        let mut stages = Vec::with_capacity(params.n_stages);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

        let mut grad = vec![0.0f64; n];
        let mut hess = vec![0.0f64; n];
        let all_indices: Vec<usize> = (0..n).collect();
        for stage_no in 0..params.n_stages {
            let mut stage_trees = Vec::with_capacity(k);
            // tree_out[c][i]: raw tree output for class c on row i.
            let mut tree_out: Vec<Vec<f64>> = Vec::with_capacity(k);
            for c in 0..k {
                for i in 0..n {
                    let p = softmax_prob(&scores[i], c);
                    if !p.is_finite() {
                        return Err(IdsError::NonFiniteGradient(stage_no));
                    }
                    let y = if labels[i] == c { 1.0 } else { 0.0 };
                    grad[i] = p - y;
                    hess[i] = (p * (1.0 - p)).max(1e-12);
                }
                let tree = grow_reg_tree(&data.rows, &grad, &hess, &all_indices, params, &mut rng);
                tree_out.push(data.rows.iter().map(|x| tree.eval(x)).collect());
                stage_trees.push(tree);
            }

            // Damp the step until the loss is non-increasing.
            let mut weight = params.learning_rate;
            let mut accepted = false;
            for _ in 0..24 {
                let candidate = apply_step(&scores, &tree_out, weight);
                let new_loss = log_loss(&candidate, &labels);
                if new_loss <= loss + 1e-12 {
                    scores = candidate;
                    loss = new_loss;
                    accepted = true;
                    break;
                }
                weight /= 2.0;
            }
            if !accepted {
                weight = 0.0;
            }
            train_loss.push(loss);
            stages.push(BoostStage {
                weight,
                trees: stage_trees,
            });
        }

        Ok(BoostedModel {
            feature_schema: data.schema.clone(),
            classes,
            params: *params,
            base_scores,
            stages,
            train_loss,
        })
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = self.base_scores.clone();
        for stage in &self.stages {
            if stage.weight == 0.0 {
                continue;
            }
            for (c, tree) in stage.trees.iter().enumerate() {
                scores[c] += stage.weight * tree.eval(x);
            }
        }
        scores
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, IdsError> {
        if x.len() != self.feature_schema.len() {
            return Err(IdsError::SchemaMismatch(format!(
                "input has {} features, model trained on {}",
                x.len(),
                self.feature_schema.len()
            )));
        }
        Ok(softmax(&self.raw_scores(x)))
    }
}

fn apply_step(scores: &[Vec<f64>], tree_out: &[Vec<f64>], weight: f64) -> Vec<Vec<f64>> {
    scores
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(c, s)| s + weight * tree_out[c][i])
                .collect()
        })
        .collect()
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn softmax_prob(scores: &[f64], c: usize) -> f64 {
    softmax(scores)[c]
}

fn log_loss(scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in scores.iter().zip(labels) {
        let p = softmax_prob(row, y).max(1e-12);
        total -= p.ln();
    }
    total / labels.len() as f64
}

/// Grow a regression tree on (gradient, hessian) pairs. Leaf value is the
/// penalized Newton step `-G / (H + lambda)`; split gain is the standard
/// second-order objective reduction.
fn grow_reg_tree(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    params: &BoostedParams,
    rng: &mut impl Rng,
) -> RegTree {
    let mut tree = RegTree { nodes: Vec::new() };
    let mut scratch = indices.to_vec();
    grow_reg_node(&mut tree, rows, grad, hess, &mut scratch, 0, params, rng);
    tree
}

#[allow(clippy::too_many_arguments)]
fn grow_reg_node(
    tree: &mut RegTree,
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &mut [usize],
    depth: usize,
    params: &BoostedParams,
    rng: &mut impl Rng,
) -> usize {
    let g: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h: f64 = indices.iter().map(|&i| hess[i]).sum();
    let leaf = |tree: &mut RegTree| {
        tree.nodes.push(RegNode::Leaf {
            value: -g / (h + params.lambda),
        });
        tree.nodes.len() - 1
    };
    if depth >= params.max_depth || indices.len() < 2 * params.min_leaf {
        return leaf(tree);
    }
    let split = match best_reg_split(rows, grad, hess, indices, g, h, params, rng) {
        Some(s) => s,
        None => return leaf(tree),
    };
    let mid = stable_partition(rows, indices, split.0, split.1);
    if mid < params.min_leaf || indices.len() - mid < params.min_leaf {
        return leaf(tree);
    }
    let node_idx = tree.nodes.len();
    tree.nodes.push(RegNode::Split {
        feature: split.0,
        threshold: split.1,
        left: 0,
        right: 0,
    });
    let (ls, rs) = indices.split_at_mut(mid);
    let l = grow_reg_node(tree, rows, grad, hess, ls, depth + 1, params, rng);
    let r = grow_reg_node(tree, rows, grad, hess, rs, depth + 1, params, rng);
    if let RegNode::Split { left, right, .. } = &mut tree.nodes[node_idx] {
        *left = l;
        *right = r;
    }
    node_idx
}

#[allow(clippy::too_many_arguments)]
fn best_reg_split(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    g_total: f64,
    h_total: f64,
    params: &BoostedParams,
    rng: &mut impl Rng,
) -> Option<(usize, f64)> {
    let d = rows[0].len();
    let m = ((params.feature_fraction * d as f64).ceil() as usize).clamp(1, d);
    let mut features: Vec<usize> = (0..d).collect();
    features.partial_shuffle(rng, m);
    features.truncate(m);

    let lambda = params.lambda;
    let parent_obj = g_total * g_total / (h_total + lambda);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f64, f64, f64)> = Vec::with_capacity(indices.len());
    for &feature in &features {
        pairs.clear();
        pairs.extend(
            indices
                .iter()
                .map(|&i| (rows[i][feature], grad[i], hess[i])),
        );
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if pairs[0].0 == pairs[pairs.len() - 1].0 {
            continue;
        }
        let mut gl = 0.0;
        let mut hl = 0.0;
        for i in 1..pairs.len() {
            gl += pairs[i - 1].1;
            hl += pairs[i - 1].2;
            if pairs[i - 1].0 == pairs[i].0 {
                continue;
            }
            if i < params.min_leaf || indices.len() - i < params.min_leaf {
                continue;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_obj;
            if gain > 1e-12 && best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                let threshold = reg_midpoint(pairs[i - 1].0, pairs[i].0);
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn reg_midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

fn stable_partition(
    rows: &[Vec<f64>],
    indices: &mut [usize],
    feature: usize,
    threshold: f64,
) -> usize {
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
