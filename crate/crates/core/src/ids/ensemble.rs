//! Weighted ensemble fusion and the alert gate.

use super::{BoostedModel, ExternalTableModel, ForestModel, IdsError};
use crate::flow::NormalizationStats;
use crate::label::{break_tie, ClassLabel};
use serde::{Deserialize, Serialize};

/// A per-class probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities(pub Vec<f64>);

impl ClassProbabilities {
    pub fn new(probs: Vec<f64>) -> Result<ClassProbabilities, IdsError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(IdsError::InvalidProbabilities(format!(
                "not a simplex (sum {sum})"
            )));
        }
        Ok(ClassProbabilities(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Any trained member model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Model {
    #[serde(rename = "forest")]
    Forest(ForestModel),
    #[serde(rename = "boosted")]
    Boosted(BoostedModel),
    #[serde(rename = "external-table")]
    External(ExternalTableModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Boosted(_) => "boosted",
            Model::External(_) => "external-table",
        }
    }

    pub fn classes(&self) -> &[ClassLabel] {
        match self {
            Model::Forest(m) => &m.classes,
            Model::Boosted(m) => &m.classes,
            Model::External(m) => &m.classes,
        }
    }

    pub fn feature_schema(&self) -> &[String] {
        match self {
            Model::Forest(m) => &m.feature_schema,
            Model::Boosted(m) => &m.feature_schema,
            Model::External(m) => &m.feature_schema,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ClassProbabilities, IdsError> {
        let probs = match self {
            Model::Forest(m) => m.predict_proba(x)?,
            Model::Boosted(m) => m.predict_proba(x)?,
            Model::External(m) => m.predict_proba(x)?,
        };
        Ok(ClassProbabilities(probs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Weighted sum of per-class probabilities; argmax wins.
    Soft,
    /// Each member casts its weight on its own argmax label.
    Hard,
}

/// Fusion configuration: member weights (normalized at use), mode, and the
/// alert threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub weights: Vec<f64>,
    pub fusion: FusionMode,
    pub theta: f64,
}

impl EnsembleConfig {
    pub fn uniform(members: usize) -> EnsembleConfig {
        EnsembleConfig {
            weights: vec![1.0; members],
            fusion: FusionMode::Soft,
            theta: 0.5,
        }
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>, IdsError> {
        if self.weights.is_empty() {
            return Err(IdsError::EmptyEnsemble);
        }
        if self.weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(IdsError::InvalidParams(
                "weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return Err(IdsError::InvalidParams("weights sum to zero".into()));
        }
        Ok(self.weights.iter().map(|w| w / total).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedDecision {
    pub label: ClassLabel,
    pub score: f64,
}

/// Fuse per-model class probabilities into one decision.
///
/// Soft mode: the fused score of class c is `sum_m w_m * P_m(c)` and the
/// label is the argmax. Hard mode: each member casts its normalized weight on
/// its own argmax label and the fused score is the winning accumulation.
/// Exact score ties break toward the label with the highest severity rank.
pub fn fuse(
    per_model: &[ClassProbabilities],
    classes: &[ClassLabel],
    cfg: &EnsembleConfig,
) -> Result<FusedDecision, IdsError> {
    if per_model.is_empty() {
        return Err(IdsError::EmptyEnsemble);
    }
    let weights = cfg.normalized_weights()?;
    if weights.len() != per_model.len() {
        return Err(IdsError::SchemaMismatch(format!(
            "{} weights for {} member outputs",
            weights.len(),
            per_model.len()
        )));
    }
    let k = classes.len();
    for (m, probs) in per_model.iter().enumerate() {
        if probs.0.len() != k {
            return Err(IdsError::SchemaMismatch(format!(
                "member {m} emitted {} probabilities for {k} classes",
                probs.0.len()
            )));
        }
    }

    let scores: Vec<f64> = match cfg.fusion {
        FusionMode::Soft => {
            let mut acc = vec![0.0; k];
            for (w, probs) in weights.iter().zip(per_model) {
                for (a, p) in acc.iter_mut().zip(&probs.0) {
                    *a += w * p;
                }
            }
            acc
        }
        FusionMode::Hard => {
            let mut votes = vec![0.0; k];
            for (w, probs) in weights.iter().zip(per_model) {
                votes[argmax_severity(&probs.0, classes)] += w;
            }
            votes
        }
    };
    let winner = argmax_severity(&scores, classes);
    Ok(FusedDecision {
        label: classes[winner],
        score: scores[winner],
    })
}

/// Index of the maximum score; exact ties resolve to the highest severity
/// rank among the tied labels.
fn argmax_severity(scores: &[f64], classes: &[ClassLabel]) -> usize {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == max)
        .map(|(i, _)| classes[i]);
    let label = break_tie(tied).expect("non-empty class set");
    classes
        .iter()
        .position(|&c| c == label)
        .expect("winner is a known class")
}

/// A gated detection: label is never Normal and confidence exceeded the
/// threshold at creation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub flow_id: String,
    pub label: ClassLabel,
    pub confidence: f64,
    pub timestamp: f64,
}

/// Emit an alert iff the fused label is an attack and its score strictly
/// exceeds `theta`.
pub fn decide(fused: FusedDecision, theta: f64, flow_id: &str, now: f64) -> Option<Alert> {
    if fused.label.is_attack() && fused.score > theta {
        Some(Alert {
            flow_id: flow_id.to_string(),
            label: fused.label,
            confidence: fused.score,
            timestamp: now,
        })
    } else {
        None
    }
}

/// One ensemble member: the model and its raw (unnormalized) weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub model: Model,
    pub weight: f64,
}

/// A complete detection bundle: member models, fusion settings, and the
/// normalizer fitted on the training features. Immutable once built; safe to
/// share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub members: Vec<EnsembleMember>,
    pub fusion: FusionMode,
    pub theta: f64,
    pub normalizer: NormalizationStats,
}

impl Detector {
    pub fn new(
        members: Vec<EnsembleMember>,
        fusion: FusionMode,
        theta: f64,
        normalizer: NormalizationStats,
    ) -> Result<Detector, IdsError> {
        if members.is_empty() {
            return Err(IdsError::EmptyEnsemble);
        }
        let classes = members[0].model.classes().to_vec();
        let schema = members[0].model.feature_schema().to_vec();
        for m in &members[1..] {
            if m.model.classes() != classes {
                return Err(IdsError::SchemaMismatch(
                    "members disagree on class set".into(),
                ));
            }
            if m.model.feature_schema() != schema {
                return Err(IdsError::SchemaMismatch(
                    "members disagree on feature schema".into(),
                ));
            }
        }
        if normalizer.feature_names != schema {
            return Err(IdsError::SchemaMismatch(
                "normalizer schema differs from member schema".into(),
            ));
        }
        Ok(Detector {
            members,
            fusion,
            theta,
            normalizer,
        })
    }

    pub fn classes(&self) -> &[ClassLabel] {
        self.members[0].model.classes()
    }

    pub fn feature_schema(&self) -> &[String] {
        self.members[0].model.feature_schema()
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            weights: self.members.iter().map(|m| m.weight).collect(),
            fusion: self.fusion,
            theta: self.theta,
        }
    }

    /// Normalize raw features, score every member, fuse.
    pub fn score(&self, raw: &[f64]) -> Result<FusedDecision, IdsError> {
        let x = self
            .normalizer
            .normalize(raw)
            .map_err(|e| IdsError::SchemaMismatch(e.to_string()))?;
        let mut per_model = Vec::with_capacity(self.members.len());
        for m in &self.members {
            per_model.push(m.model.predict_proba(&x)?);
        }
        fuse(&per_model, self.classes(), &self.ensemble_config())
    }

    /// Score and apply the alert gate.
    pub fn detect(&self, raw: &[f64], flow_id: &str, now: f64) -> Result<Option<Alert>, IdsError> {
        let fused = self.score(raw)?;
        Ok(decide(fused, self.theta, flow_id, now))
    }
}
