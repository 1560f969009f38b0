//! Run configuration.
//!
//! One serializable structure carries every tunable: flow timeout, alert
//! threshold, trainer hyperparameters, ensemble weights, policy weights and
//! thresholds, and ledger parameters. Its content hash stamps every artifact
//! a run writes, so outputs are traceable to the exact configuration.

use crate::ids::{BoostedParams, ForestParams, FusionMode};
use crate::ledger::LatencyConfig;
use crate::policy::PolicyConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Flow idle timeout, seconds.
    pub flow_timeout_s: f64,
    /// Alert/logging threshold shared by the gate and the ledger.
    pub theta: f64,
    /// Ensemble member weights; uniform when absent.
    pub ensemble_weights: Option<Vec<f64>>,
    pub fusion: FusionMode,
    pub forest: ForestParams,
    pub boosted: BoostedParams,
    pub policy: PolicyConfig,
    pub ledger_latency: LatencyConfig,
    /// Stratified-CV fold count for evaluation runs.
    pub folds: usize,
    /// Cap on training rows per fold (stratified subsample); None trains on
    /// everything.
    pub max_train_rows: Option<usize>,
    /// Collapse labels to attack-vs-Normal before training/evaluation.
    pub binary: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            seed: 0,
            flow_timeout_s: 5.0,
            theta: 0.5,
            ensemble_weights: None,
            fusion: FusionMode::Soft,
            forest: ForestParams::default(),
            boosted: BoostedParams::default(),
            policy: PolicyConfig::default(),
            ledger_latency: LatencyConfig::default(),
            folds: 5,
            max_train_rows: None,
            binary: false,
        }
    }
}

impl RunConfig {
    /// Content hash (first 16 hex digits of SHA-256 over the canonical JSON
    /// encoding). Stamped on every artifact the run writes.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, path: &Path) -> Result<(), std::io::Error> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)
    }

    /// Overlay the fields present in a JSON config file onto this
    /// configuration (objects merge recursively, scalars and arrays replace).
    pub fn overlay_file(&self, path: &Path) -> Result<RunConfig, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        let overlay: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overlay);
        serde_json::from_value(base)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = RunConfig {
            theta: 0.7,
            ..Default::default()
        };
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn file_overlay_wins_over_base() {
        let base = RunConfig {
            theta: 0.4,
            seed: 3,
            ..Default::default()
        };
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(br#"{"theta": 0.9, "policy": {"thresholds": {"high": 0.8, "medium": 0.5}}}"#)
            .unwrap();
        f.flush().unwrap();
        let merged = base.overlay_file(f.path()).unwrap();
        assert_eq!(merged.theta, 0.9);
        assert_eq!(merged.seed, 3, "untouched fields survive");
        assert_eq!(merged.policy.thresholds.high, 0.8);
        assert_eq!(
            merged.policy.qos_weights,
            Default::default(),
            "sibling objects survive"
        );
    }
}
