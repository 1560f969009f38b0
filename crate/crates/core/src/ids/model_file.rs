//! Model persistence.
//!
//! Models are stored as a JSON envelope with a schema version, the model
//! kind, the feature schema, the class set, and every hyperparameter. Float
//! values round-trip exactly (shortest-representation encoding), so a loaded
//! model predicts bit-identically to the one saved.

use super::{Detector, IdsError, Model};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelEnvelope {
    schema_version: u32,
    /// Hash of the run configuration that produced the model, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    #[serde(flatten)]
    model: Model,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectorEnvelope {
    schema_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    detector: Detector,
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), IdsError> {
    save_model_stamped(model, path, None)
}

pub fn save_model_stamped(
    model: &Model,
    path: &Path,
    config_hash: Option<&str>,
) -> Result<(), IdsError> {
    let envelope = ModelEnvelope {
        schema_version: MODEL_SCHEMA_VERSION,
        config_hash: config_hash.map(String::from),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| IdsError::CorruptModelFile(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model, IdsError> {
    let text = std::fs::read_to_string(path)?;
    let envelope: ModelEnvelope =
        serde_json::from_str(&text).map_err(|e| IdsError::CorruptModelFile(e.to_string()))?;
    if envelope.schema_version != MODEL_SCHEMA_VERSION {
        return Err(IdsError::CorruptModelFile(format!(
            "unsupported schema version {}",
            envelope.schema_version
        )));
    }
    validate(&envelope.model)?;
    Ok(envelope.model)
}

pub fn save_detector(detector: &Detector, path: &Path) -> Result<(), IdsError> {
    save_detector_stamped(detector, path, None)
}

pub fn save_detector_stamped(
    detector: &Detector,
    path: &Path,
    config_hash: Option<&str>,
) -> Result<(), IdsError> {
    let envelope = DetectorEnvelope {
        schema_version: MODEL_SCHEMA_VERSION,
        kind: "ensemble".to_string(),
        config_hash: config_hash.map(String::from),
        detector: detector.clone(),
    };
    let text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| IdsError::CorruptModelFile(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_detector(path: &Path) -> Result<Detector, IdsError> {
    let text = std::fs::read_to_string(path)?;
    let envelope: DetectorEnvelope =
        serde_json::from_str(&text).map_err(|e| IdsError::CorruptModelFile(e.to_string()))?;
    if envelope.schema_version != MODEL_SCHEMA_VERSION {
        return Err(IdsError::CorruptModelFile(format!(
            "unsupported schema version {}",
            envelope.schema_version
        )));
    }
    if envelope.kind != "ensemble" {
        return Err(IdsError::CorruptModelFile(format!(
            "expected ensemble, got {}",
            envelope.kind
        )));
    }
    for member in &envelope.detector.members {
        validate(&member.model)?;
    }
    Ok(envelope.detector)
}

/// Structural checks applied after deserialization.
fn validate(model: &Model) -> Result<(), IdsError> {
    let d = model.feature_schema().len();
    match model {
        Model::Forest(f) => {
            for tree in &f.trees {
                if let Some(max) = tree.max_feature_index() {
                    if max >= d {
                        return Err(IdsError::CorruptModelFile(format!(
                            "tree references feature {max}, schema has {d}"
                        )));
                    }
                }
            }
        }
        Model::Boosted(_) => {}
        Model::External(e) => e.validate()?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::tests_support::linearly_separable;
    use crate::ids::{ForestModel, ForestParams};
    use std::io::Write;

    #[test]
    fn round_trip_predicts_identically() {
        let data = linearly_separable(300, 5);
        let params = ForestParams {
            n_trees: 9,
            seed: 11,
            ..Default::default()
        };
        let model = Model::Forest(ForestModel::train(&data, &params).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.model");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for i in 0..1000 {
            let row = &data.rows[i % data.len()];
            let a = model.predict_proba(row).unwrap();
            let b = loaded.predict_proba(row).unwrap();
            assert_eq!(a.0, b.0, "round trip must be bit-stable");
        }
    }

    #[test]
    fn same_seed_gives_identical_file_bytes() {
        let data = linearly_separable(120, 8);
        let params = ForestParams {
            n_trees: 4,
            seed: 21,
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.model"), dir.path().join("b.model"));
        save_model(
            &Model::Forest(ForestModel::train(&data, &params).unwrap()),
            &p1,
        )
        .unwrap();
        save_model(
            &Model::Forest(ForestModel::train(&data, &params).unwrap()),
            &p2,
        )
        .unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let data = linearly_separable(60, 2);
        let model = Model::Forest(
            ForestModel::train(
                &data,
                &ForestParams {
                    n_trees: 2,
                    seed: 1,
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.model");
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(&bytes[..bytes.len() / 2]).unwrap();
        drop(f);
        assert!(matches!(
            load_model(&path),
            Err(IdsError::CorruptModelFile(_))
        ));
    }

    #[test]
    fn external_table_file_loads_and_scores_simplex() {
        use crate::ids::ExternalTableModel;
        use crate::label::ClassLabel;
        let ext = ExternalTableModel::new(
            "scores",
            vec!["a".into(), "b".into()],
            vec![ClassLabel::Normal, ClassLabel::DDoS],
            vec![(vec![0.0, 1.0], vec![0.25, 0.75])],
            vec![0.5, 0.5],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.model");
        save_model(&Model::External(ext), &path).unwrap();
        let loaded = load_model(&path).unwrap();
        let p = loaded.predict_proba(&[0.0, 1.0]).unwrap();
        let sum: f64 = p.0.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert_eq!(p.0, vec![0.25, 0.75]);
    }
}
