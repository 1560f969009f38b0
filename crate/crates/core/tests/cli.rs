//! End-to-end checks of the `secflow` binary: artifact determinism, ledger
//! audit exit codes, and the train/evaluate/report flows.

use std::path::Path;
use std::process::{Command, Output};

fn secflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secflow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_scenario(path: &Path, seed: u64, with_attack: bool) {
    let attack = if with_attack {
        r#","attack": {"kind": "DDoS", "start_s": 1.0, "intensity_mbps": 4.0, "sources": 2, "packet_bytes": 500}"#
    } else {
        ""
    };
    let json = format!(
        r#"{{
  "name": "cli-test",
  "duration_s": 6.0,
  "link_mbps": 2.0,
  "seed": {seed},
  "apps": [{{"app": "voip", "rate_kbps": 128.0, "packet_bytes": 160, "flows": 2}}],
  "active_timeout_s": 1.0,
  "measure_window": [2.0, 6.0]
  {attack}
}}"#
    );
    std::fs::write(path, json).unwrap();
}

fn write_dataset(path: &Path) {
    use std::fmt::Write as _;
    let mut csv = String::from(
        "duration,pkt_count,mean_pkt_size,byte_rate,mean_iat,dst_port_entropy,size_min,size_max,fwd_ratio,syn_count,fin_count,rst_count,label\n",
    );
    for i in 0..120 {
        let attack = i % 2 == 1;
        let (rate, entropy, label) = if attack {
            (90000.0 + i as f64, 3.0, "DDoS")
        } else {
            (1200.0 + i as f64, 0.5, "Normal")
        };
        writeln!(
            csv,
            "1.5,{},400,{rate},0.01,{entropy},60,1400,0.6,1,1,0,{label}",
            10 + i % 7
        )
        .unwrap();
    }
    std::fs::write(path, csv).unwrap();
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("ddos.json");
    write_scenario(&scenario, 1, true);

    for out in ["run1", "run2"] {
        let output = secflow(
            &[
                "simulate",
                "--scenario",
                scenario.to_str().unwrap(),
                "--seed",
                "1",
                "--enforce",
                "on",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    for artifact in [
        "events.jsonl",
        "report.json",
        "ledger.chain",
        "ledger.jsonl",
    ] {
        let a = std::fs::read(dir.path().join("run1").join(artifact)).unwrap();
        let b = std::fs::read(dir.path().join("run2").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn ledger_verify_ok_then_tampered_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write_scenario(&scenario, 7, true);
    let output = secflow(
        &[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            "sim",
        ],
        dir.path(),
    );
    assert!(output.status.success());

    let ledger = dir.path().join("sim").join("ledger.chain");
    let ok = secflow(
        &["ledger", "verify", "--ledger", ledger.to_str().unwrap()],
        dir.path(),
    );
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("Ok"));

    // Flip one byte near the end of the file (inside the last block record).
    let mut bytes = std::fs::read(&ledger).unwrap();
    let idx = bytes.len() - 40;
    bytes[idx] ^= 0x10;
    std::fs::write(&ledger, &bytes).unwrap();
    let bad = secflow(
        &["ledger", "verify", "--ledger", ledger.to_str().unwrap()],
        dir.path(),
    );
    assert!(!bad.status.success());
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(
        stderr.contains("TamperedAt") || stderr.contains("Malformed"),
        "diagnostic missing: {stderr}"
    );
}

#[test]
fn ledger_query_returns_committed_records() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    write_scenario(&scenario, 3, true);
    assert!(secflow(
        &[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            "sim"
        ],
        dir.path()
    )
    .status
    .success());
    let ledger = dir.path().join("sim").join("ledger.chain");

    // Find an attack flow id from the ledger export.
    let export = std::fs::read_to_string(dir.path().join("sim").join("ledger.jsonl")).unwrap();
    let flow_id = export
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .flat_map(|v| v["transactions"].as_array().cloned().unwrap_or_default())
        .filter_map(|t| t["flow_id"].as_str().map(String::from))
        .next()
        .expect("at least one committed transaction");

    let out = secflow(
        &[
            "ledger",
            "query",
            "--ledger",
            ledger.to_str().unwrap(),
            "--flow-id",
            &flow_id,
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"label\""));
    assert!(stdout.contains("\"confidence\""));
    assert!(stdout.contains("\"timestamp\""));
    assert!(stdout.contains("\"action\""));

    let missing = secflow(
        &[
            "ledger",
            "query",
            "--ledger",
            ledger.to_str().unwrap(),
            "--flow-id",
            "nope",
        ],
        dir.path(),
    );
    assert!(missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stdout).contains("no committed records"));
}

#[test]
fn train_writes_model_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flows.csv");
    write_dataset(&data);
    let out = secflow(
        &[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--model-out",
            "f.model",
            "--kind",
            "forest",
            "--seed",
            "7",
            "--detector-out",
            "f.detector",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("trained forest"));
    assert!(dir.path().join("f.model").exists());
    assert!(dir.path().join("f.detector").exists());

    // The detector bundle drives a simulation run.
    let scenario = dir.path().join("s.json");
    write_scenario(&scenario, 2, true);
    let sim = secflow(
        &[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--detector",
            "f.detector",
            "--out",
            "sim",
        ],
        dir.path(),
    );
    assert!(
        sim.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&sim.stderr)
    );
}

#[test]
fn evaluate_reports_folds() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flows.csv");
    write_dataset(&data);
    let out = secflow(
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--folds",
            "3",
            "--binary",
            "--out",
            "eval",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fold 0:"));
    assert!(stdout.contains("pooled:"));
    assert!(dir.path().join("eval").join("report.json").exists());
    assert!(dir.path().join("eval").join("folds.csv").exists());
}

#[test]
fn retention_report_compares_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let baseline_scn = dir.path().join("base.json");
    let attack_scn = dir.path().join("attack.json");
    write_scenario(&baseline_scn, 5, false);
    write_scenario(&attack_scn, 5, true);
    assert!(secflow(
        &[
            "simulate",
            "--scenario",
            baseline_scn.to_str().unwrap(),
            "--out",
            "base"
        ],
        dir.path()
    )
    .status
    .success());
    assert!(secflow(
        &[
            "simulate",
            "--scenario",
            attack_scn.to_str().unwrap(),
            "--out",
            "attack"
        ],
        dir.path()
    )
    .status
    .success());
    let out = secflow(
        &[
            "report",
            "--baseline",
            "base/events.jsonl",
            "--attack",
            "attack/events.jsonl",
            "--out",
            "rep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("retention[voip]"));
    assert!(dir.path().join("rep").join("qos_retention.csv").exists());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flows.csv");
    write_dataset(&data);
    // The file pins 2 folds; the flag asks for 4. The file wins.
    std::fs::write(dir.path().join("run.json"), r#"{"folds": 2}"#).unwrap();
    let out = secflow(
        &[
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--folds",
            "4",
            "--config",
            "run.json",
            "--out",
            "eval",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fold 1:"));
    assert!(
        !stdout.contains("fold 2:"),
        "config file must cap folds at 2:\n{stdout}"
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = secflow(&["train"], dir.path()); // missing required args
    assert_eq!(out.status.code(), Some(2));
    let out = secflow(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_one_with_module_error_name() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n").unwrap();
    let out = secflow(
        &["train", "--data", "bad.csv", "--model-out", "x.model"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MissingColumn"));
}
