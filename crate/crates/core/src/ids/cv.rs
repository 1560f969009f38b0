//! Stratified k-fold cross-validation.

use super::{Detector, IdsError};
use crate::dataset::LabeledDataset;
use crate::metrics::{confusion_metrics, ConfusionMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_rows: usize,
    pub accuracy_pct: f64,
    pub fpr: f64,
}

/// Deal each class's (shuffled) rows round-robin across k folds, so every
/// fold holds that class's share within one sample.
pub fn stratified_folds(
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, IdsError> {
    assert!(k >= 2, "need at least 2 folds");
    for &class in &ds.classes {
        let count = ds.labels.iter().filter(|&&l| l == class).count();
        if count < k {
            return Err(IdsError::ClassTooSmall {
                class: class.name().into(),
                count,
                k,
            });
        }
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &class in &ds.classes {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Train on k-1 folds, score the held-out fold, report accuracy and binary
/// false-positive rate per fold. `trainer` builds a detector from the
/// training split.
pub fn cross_validate(
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
    trainer: impl Fn(&LabeledDataset) -> Result<Detector, IdsError>,
) -> Result<Vec<FoldMetrics>, IdsError> {
    let folds = stratified_folds(ds, k, seed)?;
    let mut out = Vec::with_capacity(k);
    for (fold_no, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold_no)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let detector = trainer(&ds.select(&train_idx))?;
        let mut pairs = Vec::with_capacity(test_idx.len());
        for &i in test_idx {
            let fused = detector.score(&ds.rows[i])?;
            pairs.push((fused.label, ds.labels[i]));
        }
        let cm = ConfusionMatrix::from_pairs(&pairs);
        let stats = confusion_metrics(&cm)
            .map_err(|e| IdsError::InvalidParams(format!("fold {fold_no}: {e}")))?;
        out.push(FoldMetrics {
            fold: fold_no,
            test_rows: test_idx.len(),
            accuracy_pct: stats.accuracy_pct,
            fpr: stats.fpr,
        });
    }
    Ok(out)
}
