//! Intrusion detection models and ensemble fusion.
//!
//! Two tree-ensemble trainers are built natively: a bagged forest with
//! Gini-impurity splits and majority-style probability averaging, and a
//! stagewise boosted model fit on the gradient and hessian of softmax
//! log-loss with an L2 leaf penalty. Deep sequence models are not trained
//! here; they plug in as pre-scored lookup tables behind [`ExternalTableModel`].
//! Per-model class probabilities fuse by weighted soft voting (default) or
//! hard label voting, and fused decisions pass a threshold gate before an
//! alert is emitted.

mod boosted;
mod cv;
mod ensemble;
mod external;
mod forest;
mod model_file;
#[cfg(test)]
pub(crate) mod tests_support;
mod tree;

pub use boosted::{BoostedModel, BoostedParams};
pub use cv::{cross_validate, stratified_folds, FoldMetrics};
pub use ensemble::{
    decide, fuse, Alert, ClassProbabilities, Detector, EnsembleConfig, EnsembleMember,
    FusedDecision, FusionMode, Model,
};
pub use external::ExternalTableModel;
pub use forest::{ForestModel, ForestParams};
pub use model_file::{
    load_detector, load_model, save_detector, save_detector_stamped, save_model,
    save_model_stamped, MODEL_SCHEMA_VERSION,
};
pub use tree::{DecisionTree, TreeNode, TreeParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IdsError {
    #[error("EmptyDataset")]
    EmptyDataset,
    #[error("NonFiniteGradient: degenerate scores at stage {0}")]
    NonFiniteGradient(usize),
    #[error("SchemaMismatch: {0}")]
    SchemaMismatch(String),
    #[error("EmptyEnsemble")]
    EmptyEnsemble,
    #[error("ClassTooSmall: class {class} has {count} rows, need at least {k}")]
    ClassTooSmall {
        class: String,
        count: usize,
        k: usize,
    },
    #[error("CorruptModelFile: {0}")]
    CorruptModelFile(String),
    #[error("InvalidProbabilities: {0}")]
    InvalidProbabilities(String),
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
