//! Shared synthetic datasets for the classifier tests.

use crate::dataset::LabeledDataset;
use crate::label::ClassLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two Gaussian-ish blobs separated along `x + y`: linearly separable with a
/// wide margin.
pub fn linearly_separable(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let attack = i % 2 == 0;
        let center = if attack { 4.0 } else { -4.0 };
        let x = center + rng.gen_range(-1.5..1.5);
        let y = center + rng.gen_range(-1.5..1.5);
        rows.push(vec![x, y]);
        labels.push(if attack {
            ClassLabel::DDoS
        } else {
            ClassLabel::Normal
        });
    }
    LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels)
}

/// The XOR pattern over two features: not linearly separable.
pub fn xor_dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a = rng.gen_bool(0.5);
        let b = rng.gen_bool(0.5);
        let x = if a { 1.0 } else { 0.0 } + rng.gen_range(-0.2..0.2);
        let y = if b { 1.0 } else { 0.0 } + rng.gen_range(-0.2..0.2);
        rows.push(vec![x, y]);
        labels.push(if a ^ b {
            ClassLabel::DDoS
        } else {
            ClassLabel::Normal
        });
    }
    LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels)
}

/// Exhaustively re-predict the training set and return the accuracy.
pub fn train_accuracy(data: &LabeledDataset, predict: impl Fn(&[f64]) -> usize) -> f64 {
    let mut correct = 0usize;
    for (row, &label) in data.rows.iter().zip(&data.labels) {
        let ci = data.classes.iter().position(|&c| c == label).unwrap();
        if predict(row) == ci {
            correct += 1;
        }
    }
    correct as f64 / data.len() as f64
}
