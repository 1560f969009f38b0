//! Bagged forest of Gini trees.

use super::tree::{DecisionTree, TreeParams};
use super::IdsError;
use crate::dataset::LabeledDataset;
use crate::label::ClassLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Bootstrap resample size as a fraction of the training set.
    pub bootstrap_fraction: f64,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> ForestParams {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap_fraction: 1.0,
            seed: 0,
        }
    }
}

/// A trained forest. Prediction averages the per-tree leaf distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub feature_schema: Vec<String>,
    pub classes: Vec<ClassLabel>,
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Train `params.n_trees` trees, each on its own bootstrap resample with
    /// per-split feature subsampling. Deterministic for a fixed seed: every
    /// tree derives its RNG stream from `seed` and the tree index.
    pub fn train(data: &LabeledDataset, params: &ForestParams) -> Result<ForestModel, IdsError> {
        if data.is_empty() {
            return Err(IdsError::EmptyDataset);
        }
        if params.n_trees == 0 {
            return Err(IdsError::InvalidParams("n_trees must be >= 1".into()));
        }
        let classes = data.classes.clone();
        let class_index = |l: ClassLabel| classes.iter().position(|&c| c == l).unwrap();
        let labels: Vec<usize> = data.labels.iter().map(|&l| class_index(l)).collect();
        let n = data.len();
        let sample = ((params.bootstrap_fraction * n as f64).round() as usize).clamp(1, n);

        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(
                params.seed ^ (t as u64).wrapping_mul(0x9E3779B97F4A7C15),
            );
            let indices: Vec<usize> = (0..sample).map(|_| rng.gen_range(0..n)).collect();
            trees.push(DecisionTree::grow(
                &data.rows,
                &labels,
                classes.len(),
                &indices,
                &params.tree,
                &mut rng,
            ));
        }
        Ok(ForestModel {
            feature_schema: data.schema.clone(),
            classes,
            params: *params,
            trees,
        })
    }

    /// Mean of the per-tree leaf distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, IdsError> {
        if x.len() != self.feature_schema.len() {
            return Err(IdsError::SchemaMismatch(format!(
                "input has {} features, model trained on {}",
                x.len(),
                self.feature_schema.len()
            )));
        }
        let k = self.classes.len();
        let mut acc = vec![0.0; k];
        for tree in &self.trees {
            let dist = tree.leaf_distribution(x);
            for (a, p) in acc.iter_mut().zip(&dist) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
        Ok(acc)
    }
}
