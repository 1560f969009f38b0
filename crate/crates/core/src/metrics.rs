//! Evaluation metrics: confusion-matrix statistics, event-log latencies,
//! QoS retention, detection throughput, drift resilience, and the report
//! emitter.

use crate::label::ClassLabel;
use crate::ledger::LatencyRow;
use crate::netsim::{Event, EventLog};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("UndefinedFPR: FP + TN = 0")]
    UndefinedFpr,
    #[error("EmptyMatrix")]
    EmptyMatrix,
    #[error("OrphanEvent: {0}")]
    OrphanEvent(String),
    #[error("ZeroBaseline: app {0:?} delivered nothing in the baseline window")]
    ZeroBaseline(String),
    #[error("TooFewFlows: {got} flows for {segments} segments (need {need})")]
    TooFewFlows {
        got: usize,
        segments: usize,
        need: usize,
    },
    #[error("MismatchedWindows: baseline {baseline:?} vs attack {attack:?}")]
    MismatchedWindows {
        baseline: (f64, f64),
        attack: (f64, f64),
    },
    #[error("io: {0}")]
    Io(String),
}

/// Binary confusion counts (attack = positive) plus the per-class table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    /// (truth, predicted) -> count over the full label set.
    pub per_class: BTreeMap<String, BTreeMap<String, u64>>,
}

impl ConfusionMatrix {
    /// Build from (predicted, truth) pairs. Any non-Normal label counts as
    /// positive in the binary view.
    pub fn from_pairs(pairs: &[(ClassLabel, ClassLabel)]) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for &(predicted, truth) in pairs {
            match (truth.is_attack(), predicted.is_attack()) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fn_ += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
            }
            *cm.per_class
                .entry(truth.name().to_string())
                .or_default()
                .entry(predicted.name().to_string())
                .or_insert(0) += 1;
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    /// Percent correct over all evaluated flows.
    pub accuracy_pct: f64,
    /// False positives over all benign flows, as a fraction.
    pub fpr: f64,
}

pub fn confusion_metrics(cm: &ConfusionMatrix) -> Result<ConfusionStats, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    if cm.fp + cm.tn == 0 {
        return Err(MetricsError::UndefinedFpr);
    }
    Ok(ConfusionStats {
        accuracy_pct: (cm.tp + cm.tn) as f64 / total as f64 * 100.0,
        fpr: cm.fp as f64 / (cm.fp + cm.tn) as f64,
    })
}

/// mean/min/max over a latency series, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StatBlock {
    pub count: usize,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl StatBlock {
    pub fn from_series(series: &[f64]) -> StatBlock {
        if series.is_empty() {
            return StatBlock::default();
        }
        StatBlock {
            count: series.len(),
            mean_ms: series.iter().sum::<f64>() / series.len() as f64,
            min_ms: series.iter().cloned().fold(f64::INFINITY, f64::min),
            max_ms: series.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LatencyMetrics {
    /// Alert raised -> enforcement rule active.
    pub alert_response: StatBlock,
    /// Rule install requested -> applied.
    pub reconfig: StatBlock,
    /// Transaction submitted -> committed.
    pub txn: StatBlock,
}

/// Latency statistics from an event log.
///
/// Each rule installation pairs with the latest alert for its flow at or
/// before the request time; an installation with no such alert is an orphan.
/// Transactions pair submit/commit by id.
pub fn latency_metrics(log: &EventLog) -> Result<LatencyMetrics, MetricsError> {
    let mut alert_response = Vec::new();
    let mut reconfig = Vec::new();
    let mut txn = Vec::new();

    for e in &log.events {
        if let Event::RuleInstalled {
            ts,
            flow,
            requested_ts,
            ..
        } = e
        {
            let alert_ts = log
                .events
                .iter()
                .filter_map(|a| match a {
                    Event::AlertRaised {
                        ts: ats, flow: af, ..
                    } if af == flow && *ats <= *requested_ts => Some(*ats),
                    _ => None,
                })
                .fold(None, |acc: Option<f64>, ts| {
                    Some(acc.map_or(ts, |a| a.max(ts)))
                });
            let alert_ts = alert_ts.ok_or_else(|| {
                MetricsError::OrphanEvent(format!("rule for {flow} has no matching alert"))
            })?;
            alert_response.push((ts - alert_ts) * 1000.0);
            reconfig.push((ts - requested_ts) * 1000.0);
        }
    }

    let mut submitted: BTreeMap<&str, f64> = BTreeMap::new();
    for e in &log.events {
        match e {
            Event::TxnSubmitted { ts, id, .. } => {
                submitted.insert(id.as_str(), *ts);
            }
            Event::TxnCommitted { ts, id, .. } => {
                let s = submitted.get(id.as_str()).ok_or_else(|| {
                    MetricsError::OrphanEvent(format!("commit for unknown txn {id}"))
                })?;
                txn.push((ts - s) * 1000.0);
            }
            _ => {}
        }
    }

    Ok(LatencyMetrics {
        alert_response: StatBlock::from_series(&alert_response),
        reconfig: StatBlock::from_series(&reconfig),
        txn: StatBlock::from_series(&txn),
    })
}

/// Delivered bytes for one application inside the log's measurement window.
pub fn delivered_bytes_for_app(log: &EventLog, app: &str, window: (f64, f64)) -> u64 {
    log.events
        .iter()
        .filter_map(|e| match e {
            Event::PacketDelivered {
                ts, flow, bytes, ..
            } if *ts >= window.0
                && *ts <= window.1
                && log.meta.flow_apps.get(flow).map(String::as_str) == Some(app) =>
            {
                Some(*bytes)
            }
            _ => None,
        })
        .sum()
}

/// QoS retention: delivered rate for `app` under attack as a percentage of
/// the baseline run, over the shared measurement window.
pub fn qos_retention(
    baseline: &EventLog,
    attack: &EventLog,
    app: &str,
) -> Result<f64, MetricsError> {
    if baseline.meta.window != attack.meta.window {
        return Err(MetricsError::MismatchedWindows {
            baseline: baseline.meta.window,
            attack: attack.meta.window,
        });
    }
    let window = baseline.meta.window;
    let base = delivered_bytes_for_app(baseline, app, window);
    if base == 0 {
        return Err(MetricsError::ZeroBaseline(app.to_string()));
    }
    let atk = delivered_bytes_for_app(attack, app, window);
    Ok(atk as f64 / base as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputDrift {
    pub flows_per_sec: f64,
    /// Min temporal-segment accuracy over first-segment accuracy, percent.
    pub drift_resilience_pct: f64,
    pub segment_accuracy: [f64; 4],
}

/// Detection throughput and drift resilience over time-ordered predictions.
///
/// Drift resilience is the accuracy of the worst temporal segment relative
/// to the first segment (equal-count segments). This is an artifact
/// definition; reports label it as such.
pub fn throughput_and_drift(
    results: &[(ClassLabel, ClassLabel)],
    wallclock_s: f64,
    segments: usize,
) -> Result<ThroughputDrift, MetricsError> {
    assert!(wallclock_s > 0.0, "wallclock must be positive");
    let need = segments * 10;
    if results.len() < need {
        return Err(MetricsError::TooFewFlows {
            got: results.len(),
            segments,
            need,
        });
    }
    let n = results.len();
    let base = n / segments;
    let remainder = n % segments;
    let mut accs = Vec::with_capacity(segments);
    let mut start = 0usize;
    for s in 0..segments {
        let len = base + usize::from(s < remainder);
        let seg = &results[start..start + len];
        start += len;
        let correct = seg.iter().filter(|(p, t)| p == t).count();
        accs.push(correct as f64 / seg.len() as f64);
    }
    let first = accs[0];
    let worst = accs.iter().cloned().fold(f64::INFINITY, f64::min);
    let drift = if first > 0.0 {
        worst / first * 100.0
    } else {
        0.0
    };
    let mut segment_accuracy = [0.0; 4];
    for (i, a) in accs.iter().take(4).enumerate() {
        segment_accuracy[i] = *a;
    }
    Ok(ThroughputDrift {
        flows_per_sec: n as f64 / wallclock_s,
        drift_resilience_pct: drift,
        segment_accuracy,
    })
}

/// Everything a run can report. Optional sections stay absent when the run
/// did not produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsReport {
    /// Hash of the run configuration that produced every value below.
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyMetrics>,
    /// Simulated ledger latency table; empty when not measured.
    #[serde(default)]
    pub txn_latency_table: Vec<LatencyRow>,
    /// App name -> retention percent.
    #[serde(default)]
    pub qos_retention_pct: BTreeMap<String, f64>,
    /// Measurement window the QoS numbers used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qos_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput_flows_per_sec: Option<f64>,
    /// Artifact definition: worst temporal segment accuracy over first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_resilience_pct: Option<f64>,
    #[serde(default)]
    pub per_fold: Vec<crate::ids::FoldMetrics>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Write `report.json` plus one CSV series per populated metric. Re-running
/// on identical inputs reproduces identical bytes.
pub fn emit_report(report: &MetricsReport, out_dir: &Path) -> Result<Vec<String>, MetricsError> {
    std::fs::create_dir_all(out_dir).map_err(|e| MetricsError::Io(e.to_string()))?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(report).map_err(|e| MetricsError::Io(e.to_string()))?;
    write_bytes(out_dir.join("report.json"), json.as_bytes(), &mut written)?;

    if !report.txn_latency_table.is_empty() {
        let mut csv = format!("# config_hash={}\n", report.config_hash);
        csv.push_str("block_size,concurrency,txns,mean_ms,min_ms,max_ms\n");
        for row in &report.txn_latency_table {
            csv.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                row.block_size, row.concurrency, row.txns, row.mean_ms, row.min_ms, row.max_ms
            ));
        }
        write_bytes(
            out_dir.join("txn_latency.csv"),
            csv.as_bytes(),
            &mut written,
        )?;
    }

    if !report.qos_retention_pct.is_empty() {
        let mut csv = format!("# config_hash={}\n", report.config_hash);
        csv.push_str("app,retention_pct\n");
        for (app, pct) in &report.qos_retention_pct {
            csv.push_str(&format!("{app},{pct:.6}\n"));
        }
        write_bytes(
            out_dir.join("qos_retention.csv"),
            csv.as_bytes(),
            &mut written,
        )?;
    }

    if let Some(latency) = &report.latency {
        let mut csv = format!("# config_hash={}\n", report.config_hash);
        csv.push_str("series,count,mean_ms,min_ms,max_ms\n");
        for (name, s) in [
            ("alert_response", latency.alert_response),
            ("reconfig", latency.reconfig),
            ("txn", latency.txn),
        ] {
            csv.push_str(&format!(
                "{name},{},{:.6},{:.6},{:.6}\n",
                s.count, s.mean_ms, s.min_ms, s.max_ms
            ));
        }
        write_bytes(out_dir.join("latency.csv"), csv.as_bytes(), &mut written)?;
    }

    if !report.per_fold.is_empty() {
        let mut csv = format!("# config_hash={}\n", report.config_hash);
        csv.push_str("fold,test_rows,accuracy_pct,fpr\n");
        for f in &report.per_fold {
            csv.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                f.fold, f.test_rows, f.accuracy_pct, f.fpr
            ));
        }
        write_bytes(out_dir.join("folds.csv"), csv.as_bytes(), &mut written)?;
    }

    Ok(written)
}

fn write_bytes(
    path: std::path::PathBuf,
    bytes: &[u8],
    written: &mut Vec<String>,
) -> Result<(), MetricsError> {
    let mut f = std::fs::File::create(&path).map_err(|e| MetricsError::Io(e.to_string()))?;
    f.write_all(bytes)
        .map_err(|e| MetricsError::Io(e.to_string()))?;
    written.push(path.display().to_string());
    Ok(())
}

pub fn load_report(path: &Path) -> Result<MetricsReport, MetricsError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetricsError::Io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| MetricsError::Io(e.to_string()))
}
