//! Externally scored models.
//!
//! Models trained elsewhere (deep sequence learners and the like) join the
//! ensemble as lookup tables: a list of (feature vector, class probabilities)
//! entries scored offline, plus a default distribution for unseen inputs.
//! Keys are quantized to 1e-6 so lookups are exact and stable across the
//! decimal round-trip through model files.

use super::IdsError;
use crate::label::ClassLabel;
use serde::{Deserialize, Serialize};

const KEY_QUANTUM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTableModel {
    pub id: String,
    pub feature_schema: Vec<String>,
    pub classes: Vec<ClassLabel>,
    /// Scored entries: (input vector, probability simplex).
    pub entries: Vec<(Vec<f64>, Vec<f64>)>,
    /// Returned when the input matches no entry.
    pub default_probs: Vec<f64>,
}

impl ExternalTableModel {
    pub fn new(
        id: impl Into<String>,
        feature_schema: Vec<String>,
        classes: Vec<ClassLabel>,
        entries: Vec<(Vec<f64>, Vec<f64>)>,
        default_probs: Vec<f64>,
    ) -> Result<ExternalTableModel, IdsError> {
        let model = ExternalTableModel {
            id: id.into(),
            feature_schema,
            classes,
            entries,
            default_probs,
        };
        model.validate()?;
        Ok(model)
    }

    /// A table with no entries: the model always answers `default_probs`.
    /// Useful as a constant-scoring stand-in.
    pub fn constant(
        id: impl Into<String>,
        feature_schema: Vec<String>,
        classes: Vec<ClassLabel>,
        default_probs: Vec<f64>,
    ) -> Result<ExternalTableModel, IdsError> {
        ExternalTableModel::new(id, feature_schema, classes, Vec::new(), default_probs)
    }

    pub fn validate(&self) -> Result<(), IdsError> {
        let k = self.classes.len();
        let check = |probs: &[f64], what: &str| -> Result<(), IdsError> {
            if probs.len() != k {
                return Err(IdsError::InvalidProbabilities(format!(
                    "{what}: {} values for {k} classes",
                    probs.len()
                )));
            }
            let sum: f64 = probs.iter().sum();
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(IdsError::InvalidProbabilities(format!(
                    "{what}: not a simplex (sum {sum})"
                )));
            }
            Ok(())
        };
        check(&self.default_probs, "default")?;
        for (i, (key, probs)) in self.entries.iter().enumerate() {
            if key.len() != self.feature_schema.len() {
                return Err(IdsError::SchemaMismatch(format!(
                    "entry {i} key has {} values, schema has {}",
                    key.len(),
                    self.feature_schema.len()
                )));
            }
            check(probs, &format!("entry {i}"))?;
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, IdsError> {
        if x.len() != self.feature_schema.len() {
            return Err(IdsError::SchemaMismatch(format!(
                "input has {} features, table keyed on {}",
                x.len(),
                self.feature_schema.len()
            )));
        }
        let key = quantize(x);
        for (entry_key, probs) in &self.entries {
            if quantize(entry_key) == key {
                return Ok(probs.clone());
            }
        }
        Ok(self.default_probs.clone())
    }
}

fn quantize(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * KEY_QUANTUM).round() as i64).collect()
}
