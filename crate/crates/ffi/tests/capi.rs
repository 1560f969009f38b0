//! Exercises the C ABI end to end: simulate, open/verify/query the ledger,
//! tamper detection, and detector scoring, all through the extern "C"
//! surface.

use secflow_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn write_scenario(path: &std::path::Path) {
    std::fs::write(
        path,
        r#"{
  "name": "ffi-test",
  "duration_s": 6.0,
  "link_mbps": 2.0,
  "seed": 4,
  "apps": [{"app": "voip", "rate_kbps": 128.0, "packet_bytes": 160, "flows": 2}],
  "attack": {"kind": "DDoS", "start_s": 1.0, "intensity_mbps": 4.0, "sources": 2, "packet_bytes": 400},
  "active_timeout_s": 1.0
}"#,
    )
    .unwrap();
}

#[test]
fn version_and_null_handling() {
    let version = unsafe { CStr::from_ptr(secflow_version()) };
    assert!(!version.to_str().unwrap().is_empty());

    let mut out: *mut SecflowDetector = ptr::null_mut();
    let status = unsafe { secflow_detector_load(ptr::null(), &mut out) };
    assert_eq!(status, SecflowStatus::NullArgument);
    let msg = unsafe { CStr::from_ptr(secflow_last_error()) };
    assert!(msg.to_str().unwrap().contains("null"));
}

#[test]
fn simulate_then_audit_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write_scenario(&scenario);
    let out_dir = dir.path().join("run");

    let status = unsafe {
        secflow_simulate(
            c(scenario.to_str().unwrap()).as_ptr(),
            4,
            true,
            c(out_dir.to_str().unwrap()).as_ptr(),
        )
    };
    assert_eq!(status, SecflowStatus::Ok);
    let ledger_path = out_dir.join("ledger.chain");
    assert!(ledger_path.exists());

    // Open and verify: intact.
    let mut ledger: *mut SecflowLedger = ptr::null_mut();
    let status =
        unsafe { secflow_ledger_open(c(ledger_path.to_str().unwrap()).as_ptr(), &mut ledger) };
    assert_eq!(status, SecflowStatus::Ok);
    assert!(unsafe { secflow_ledger_block_count(ledger) } >= 2);
    let (mut block, mut txn) = (-2i64, -2i64);
    let status = unsafe { secflow_ledger_verify(ledger, &mut block, &mut txn) };
    assert_eq!(status, SecflowStatus::Ok);
    assert_eq!((block, txn), (-1, -1));

    // Query an attacked flow out of the export.
    let export = std::fs::read_to_string(out_dir.join("ledger.jsonl")).unwrap();
    let flow_id = export
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .flat_map(|v| v["transactions"].as_array().cloned().unwrap_or_default())
        .filter_map(|t| t["flow_id"].as_str().map(String::from))
        .next()
        .expect("committed transactions exist");
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { secflow_ledger_query(ledger, c(&flow_id).as_ptr(), &mut json) };
    assert_eq!(status, SecflowStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { secflow_string_free(json) };
    let records: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(!records.as_array().unwrap().is_empty());
    assert!(records[0]["confidence"].as_f64().unwrap() > 0.5);
    unsafe { secflow_ledger_free(ledger) };

    // Tamper with the file: verify reports the fault through the ABI.
    let mut bytes = std::fs::read(&ledger_path).unwrap();
    let n = bytes.len();
    bytes[n - 50] ^= 0x01;
    std::fs::write(&ledger_path, &bytes).unwrap();
    let mut ledger: *mut SecflowLedger = ptr::null_mut();
    let status =
        unsafe { secflow_ledger_open(c(ledger_path.to_str().unwrap()).as_ptr(), &mut ledger) };
    if status == SecflowStatus::Ok {
        let status = unsafe { secflow_ledger_verify(ledger, ptr::null_mut(), ptr::null_mut()) };
        assert_eq!(status, SecflowStatus::Tampered);
        unsafe { secflow_ledger_free(ledger) };
    } else {
        assert_eq!(
            status,
            SecflowStatus::Parse,
            "corruption may break parsing instead"
        );
    }
}

#[test]
fn detector_round_trip_through_the_abi() {
    use secflow::dataset::LabeledDataset;
    use secflow::flow::NormalizationStats;
    use secflow::ids::{
        save_detector, Detector, EnsembleMember, ForestModel, ForestParams, FusionMode, Model,
    };
    use secflow::label::ClassLabel;

    // Train a small forest on a separable set and bundle it.
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let c = if i % 2 == 0 { 4.0 } else { -4.0 };
            vec![c + (i % 7) as f64 * 0.1, c - (i % 5) as f64 * 0.1]
        })
        .collect();
    let labels: Vec<ClassLabel> = (0..200)
        .map(|i| {
            if i % 2 == 0 {
                ClassLabel::DDoS
            } else {
                ClassLabel::Normal
            }
        })
        .collect();
    let data = LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels);
    let stats = NormalizationStats::fit(&data.schema, &data.rows).unwrap();
    let normalized: Vec<Vec<f64>> = data
        .rows
        .iter()
        .map(|r| stats.normalize(r).unwrap())
        .collect();
    let norm_data = LabeledDataset::new(data.schema.clone(), normalized, data.labels.clone());
    let forest = ForestModel::train(
        &norm_data,
        &ForestParams {
            n_trees: 5,
            seed: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let detector = Detector::new(
        vec![EnsembleMember {
            model: Model::Forest(forest),
            weight: 1.0,
        }],
        FusionMode::Soft,
        0.5,
        stats,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.model");
    save_detector(&detector, &path).unwrap();

    let mut handle: *mut SecflowDetector = ptr::null_mut();
    let status = unsafe { secflow_detector_load(c(path.to_str().unwrap()).as_ptr(), &mut handle) };
    assert_eq!(status, SecflowStatus::Ok);
    assert_eq!(unsafe { secflow_detector_feature_count(handle) }, 2);

    let features = [4.2f64, 3.9];
    let mut score = 0.0f64;
    let mut label: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe {
        secflow_detector_score(
            handle,
            features.as_ptr(),
            features.len(),
            &mut score,
            &mut label,
        )
    };
    assert_eq!(status, SecflowStatus::Ok);
    let label_str = unsafe { CStr::from_ptr(label) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { secflow_string_free(label) };
    assert_eq!(label_str, "DDoS");
    assert!(score > 0.5);

    // Through-ABI result equals the library result.
    let fused = detector.score(&features).unwrap();
    assert_eq!(fused.score, score);

    // Wrong arity is a runtime error, not a crash.
    let bad = [1.0f64];
    let status =
        unsafe { secflow_detector_score(handle, bad.as_ptr(), bad.len(), &mut score, &mut label) };
    assert_eq!(status, SecflowStatus::Runtime);
    unsafe { secflow_detector_free(handle) };
}
