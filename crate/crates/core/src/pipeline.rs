//! End-to-end workflows behind the CLI subcommands: training, stratified
//! evaluation, simulation runs, and the throughput benchmark.

use crate::config::RunConfig;
use crate::dataset::LabeledDataset;
use crate::flow::{FlowKey, FlowState, NormalizationStats};
use crate::ids::{
    BoostedModel, Detector, EnsembleMember, FoldMetrics, ForestModel, IdsError, Model,
};
use crate::label::ClassLabel;
use crate::metrics::{
    confusion_metrics, emit_report, latency_metrics, qos_retention, ConfusionMatrix, MetricsError,
    MetricsReport,
};
use crate::netsim::{
    generate_traffic, run_closed_loop, EventLog, NetsimError, NeverAlertDetector, ScenarioConfig,
    SimOutput, TruthOracleDetector,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Ids(#[from] IdsError),
    #[error("{0}")]
    Netsim(#[from] NetsimError),
    #[error("{0}")]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error("{0}")]
    Flow(#[from] crate::flow::FlowError),
    #[error("{0}")]
    Ledger(#[from] crate::ledger::LedgerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which model a `train` invocation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Forest,
    Boosted,
}

/// Fit a normalizer on the dataset, train one model on the normalized rows.
pub fn train_model(
    cfg: &RunConfig,
    data: &LabeledDataset,
    kind: ModelKind,
) -> Result<(Model, NormalizationStats), PipelineError> {
    let stats = NormalizationStats::fit(&data.schema, &data.rows)
        .map_err(|e| IdsError::InvalidParams(e.to_string()))?;
    let normalized = normalize_dataset(data, &stats)?;
    let model = match kind {
        ModelKind::Forest => {
            let params = crate::ids::ForestParams {
                seed: cfg.seed,
                ..cfg.forest
            };
            Model::Forest(ForestModel::train(&normalized, &params)?)
        }
        ModelKind::Boosted => {
            let params = crate::ids::BoostedParams {
                seed: cfg.seed,
                ..cfg.boosted
            };
            Model::Boosted(BoostedModel::train(&normalized, &params)?)
        }
    };
    Ok((model, stats))
}

fn normalize_dataset(
    data: &LabeledDataset,
    stats: &NormalizationStats,
) -> Result<LabeledDataset, PipelineError> {
    let rows: Result<Vec<Vec<f64>>, _> = data.rows.iter().map(|r| stats.normalize(r)).collect();
    let rows = rows.map_err(|e| IdsError::SchemaMismatch(e.to_string()))?;
    Ok(LabeledDataset::new(
        data.schema.clone(),
        rows,
        data.labels.clone(),
    ))
}

/// Build the native forest+boosted soft ensemble from a training split.
pub fn build_detector(cfg: &RunConfig, train: &LabeledDataset) -> Result<Detector, PipelineError> {
    let train = match cfg.max_train_rows {
        Some(cap) if train.len() > cap => stratified_subsample(train, cap, cfg.seed),
        _ => train.clone(),
    };
    let stats = NormalizationStats::fit(&train.schema, &train.rows)
        .map_err(|e| IdsError::InvalidParams(e.to_string()))?;
    let normalized = normalize_dataset(&train, &stats)?;
    let forest = ForestModel::train(
        &normalized,
        &crate::ids::ForestParams {
            seed: cfg.seed,
            ..cfg.forest
        },
    )?;
    let boosted = BoostedModel::train(
        &normalized,
        &crate::ids::BoostedParams {
            seed: cfg.seed.wrapping_add(1),
            ..cfg.boosted
        },
    )?;
    let weights = match &cfg.ensemble_weights {
        Some(w) if w.len() == 2 => w.clone(),
        _ => vec![1.0, 1.0],
    };
    let members = vec![
        EnsembleMember {
            model: Model::Forest(forest),
            weight: weights[0],
        },
        EnsembleMember {
            model: Model::Boosted(boosted),
            weight: weights[1],
        },
    ];
    Ok(Detector::new(members, cfg.fusion, cfg.theta, stats)?)
}

/// Proportional per-class subsample, seeded.
pub fn stratified_subsample(data: &LabeledDataset, cap: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5355_4253);
    let frac = cap as f64 / data.len() as f64;
    let mut picked = Vec::new();
    for &class in &data.classes {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] == class)
            .collect();
        members.shuffle(&mut rng);
        let keep = ((members.len() as f64 * frac).round() as usize)
            .max(1)
            .min(members.len());
        picked.extend(members.into_iter().take(keep));
    }
    picked.sort_unstable();
    data.select(&picked)
}

pub struct EvaluationOutput {
    pub folds: Vec<FoldMetrics>,
    /// Pooled (predicted, truth) pairs over every held-out fold, in dataset
    /// row order.
    pub pooled: Vec<(ClassLabel, ClassLabel)>,
    pub confusion: ConfusionMatrix,
    pub accuracy_pct: f64,
    pub fpr: f64,
}

/// Stratified k-fold evaluation of the native ensemble. Each fold trains
/// once; fold metrics and the pooled row-order predictions come from the
/// same pass.
pub fn evaluate_cv(
    cfg: &RunConfig,
    data: &LabeledDataset,
) -> Result<EvaluationOutput, PipelineError> {
    let data = if cfg.binary {
        data.to_binary()
    } else {
        data.clone()
    };
    let fold_indices = crate::ids::stratified_folds(&data, cfg.folds, cfg.seed)?;
    let mut by_row: Vec<Option<ClassLabel>> = vec![None; data.len()];
    let mut folds = Vec::with_capacity(cfg.folds);
    for (fold_no, test_idx) in fold_indices.iter().enumerate() {
        let train_idx: Vec<usize> = fold_indices
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold_no)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let detector = build_detector(cfg, &data.select(&train_idx))?;
        let mut pairs = Vec::with_capacity(test_idx.len());
        for &i in test_idx {
            let fused = detector.score(&data.rows[i]).map_err(PipelineError::Ids)?;
            by_row[i] = Some(fused.label);
            pairs.push((fused.label, data.labels[i]));
        }
        let cm = ConfusionMatrix::from_pairs(&pairs);
        let stats = confusion_metrics(&cm)?;
        folds.push(FoldMetrics {
            fold: fold_no,
            test_rows: test_idx.len(),
            accuracy_pct: stats.accuracy_pct,
            fpr: stats.fpr,
        });
    }
    let pooled: Vec<(ClassLabel, ClassLabel)> = by_row
        .into_iter()
        .zip(&data.labels)
        .map(|(p, &t)| (p.expect("every row is in exactly one test fold"), t))
        .collect();
    let confusion = ConfusionMatrix::from_pairs(&pooled);
    let stats = confusion_metrics(&confusion)?;
    Ok(EvaluationOutput {
        folds,
        pooled,
        confusion,
        accuracy_pct: stats.accuracy_pct,
        fpr: stats.fpr,
    })
}

/// Detector selection for simulation runs.
pub enum DetectorChoice {
    /// Ground-truth oracle with fixed confidence.
    Oracle { confidence: f64 },
    /// Stub that never alerts.
    Never,
    /// A trained ensemble loaded from a detector file.
    Ensemble(Box<Detector>),
}

/// Run a scenario end to end and write all artifacts under `out_dir`:
/// `events.jsonl`, `ledger.chain`, `ledger.jsonl`, `report.json` and CSV
/// series, and the effective scenario. With `export_trace` the generated
/// packet trace is also written as `trace.csv`.
pub fn simulate_to_dir(
    scenario: &ScenarioConfig,
    choice: &DetectorChoice,
    cfg: &RunConfig,
    out_dir: &Path,
    export_trace: bool,
) -> Result<SimOutput, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let config_hash = cfg.content_hash();

    if export_trace {
        let traffic = generate_traffic(scenario)?;
        crate::dataset::write_trace_csv(&out_dir.join("trace.csv"), &traffic.packets)?;
    }
    let out = run_simulation(scenario, choice, cfg)?;
    out.log.save_jsonl(&out_dir.join("events.jsonl"))?;
    out.chain
        .save(&out.directory, &out_dir.join("ledger.chain"))?;
    out.chain.export_jsonl(&out_dir.join("ledger.jsonl"))?;
    std::fs::write(
        out_dir.join("scenario.json"),
        serde_json::to_string_pretty(scenario).map_err(std::io::Error::from)?,
    )?;
    cfg.save(&out_dir.join("run_config.json"))?;

    let mut report = MetricsReport {
        config_hash: config_hash.clone(),
        latency: Some(latency_metrics(&out.log)?),
        qos_window: Some(out.log.meta.window),
        notes: out.warnings.clone(),
        ..Default::default()
    };
    // Per-app delivered bytes inside the measurement window, for retention
    // computations against a baseline run.
    for app in out
        .log
        .meta
        .flow_apps
        .values()
        .collect::<std::collections::BTreeSet<_>>()
    {
        let bytes = crate::metrics::delivered_bytes_for_app(&out.log, app, out.log.meta.window);
        report
            .notes
            .push(format!("delivered[{app}]={bytes}B in window"));
    }
    emit_report(&report, out_dir)?;
    Ok(out)
}

pub fn run_simulation(
    scenario: &ScenarioConfig,
    choice: &DetectorChoice,
    cfg: &RunConfig,
) -> Result<SimOutput, PipelineError> {
    let config_hash = cfg.content_hash();
    let out = match choice {
        DetectorChoice::Oracle { confidence } => {
            let truth = generate_traffic(scenario)?.truth;
            let oracle = TruthOracleDetector {
                truth: truth.iter().map(|(k, t)| (*k, t.label)).collect(),
                confidence: *confidence,
            };
            run_closed_loop(scenario, &oracle, &cfg.policy, &config_hash)?
        }
        DetectorChoice::Never => {
            run_closed_loop(scenario, &NeverAlertDetector, &cfg.policy, &config_hash)?
        }
        DetectorChoice::Ensemble(detector) => {
            run_closed_loop(scenario, detector.as_ref(), &cfg.policy, &config_hash)?
        }
    };
    Ok(out)
}

/// QoS retention report comparing an attack-run log against a baseline log.
pub fn retention_report(
    baseline: &EventLog,
    attack: &EventLog,
    config_hash: &str,
) -> Result<MetricsReport, PipelineError> {
    let mut retention = BTreeMap::new();
    let apps: std::collections::BTreeSet<&String> = baseline.meta.flow_apps.values().collect();
    for app in apps {
        match qos_retention(baseline, attack, app) {
            Ok(pct) => {
                retention.insert(app.clone(), pct);
            }
            Err(MetricsError::ZeroBaseline(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(MetricsReport {
        config_hash: config_hash.to_string(),
        latency: Some(latency_metrics(attack)?),
        qos_retention_pct: retention,
        qos_window: Some(attack.meta.window),
        ..Default::default()
    })
}

/// Synthesize `n` completed flows with class-dependent statistics, for
/// benchmarking and feature-path tests. Returns flows and their labels.
pub fn synthetic_flows(n: usize, seed: u64) -> Vec<(FlowState, ClassLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let attack = i % 2 == 1;
        let key = FlowKey::new(
            std::net::Ipv4Addr::new(10, (i >> 16) as u8, (i >> 8) as u8, i as u8),
            (1024 + (i % 50_000)) as u16,
            std::net::Ipv4Addr::new(10, 99, 0, 1),
            if attack { 80 } else { 443 },
            crate::flow::Protocol::Tcp,
        );
        let pkt_count = if attack {
            rng.gen_range(50..500)
        } else {
            rng.gen_range(2..50)
        } as u64;
        let duration = if attack {
            rng.gen_range(0.01..0.5)
        } else {
            rng.gen_range(0.5..10.0)
        };
        let first_ts = rng.gen_range(0.0..1000.0);
        let mean_size = if attack {
            rng.gen_range(40.0..200.0)
        } else {
            rng.gen_range(200.0..1400.0)
        };
        let byte_sum = (mean_size * pkt_count as f64) as u64;
        let mut dst_port_counts = BTreeMap::new();
        if attack {
            // Scanning-ish spread over ports.
            let distinct = rng.gen_range(3..12u16);
            for p in 0..distinct {
                dst_port_counts.insert(1000 + p, pkt_count / distinct as u64 + 1);
            }
        } else {
            dst_port_counts.insert(443, pkt_count);
        }
        let flow = FlowState {
            key,
            initiator: key.ep_a,
            first_ts,
            last_ts: first_ts + duration,
            pkt_count,
            byte_sum,
            iat_sum: duration,
            iat_sq_sum: duration * duration / pkt_count.max(1) as f64,
            size_min: (mean_size * 0.5) as u64,
            size_max: (mean_size * 1.5) as u64,
            dst_port_counts,
            fwd_pkt_count: pkt_count / 2 + pkt_count % 2,
            bwd_pkt_count: pkt_count / 2,
            syn_count: if attack { pkt_count / 2 } else { 1 },
            fin_count: u64::from(!attack),
            rst_count: 0,
            label: Some(if attack {
                ClassLabel::DDoS
            } else {
                ClassLabel::Normal
            }),
        };
        out.push((
            flow,
            if attack {
                ClassLabel::DDoS
            } else {
                ClassLabel::Normal
            },
        ));
    }
    out
}

pub struct BenchOutput {
    pub flows_scored: usize,
    pub wallclock_s: f64,
    pub flows_per_sec: f64,
    pub drift_resilience_pct: f64,
    pub accuracy_pct: f64,
}

/// Featurize -> normalize -> predict -> fuse over pre-generated flows with a
/// trained forest, timed on the wall clock, single-threaded.
pub fn bench_throughput(
    n_flows: usize,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
) -> Result<BenchOutput, PipelineError> {
    let flows = synthetic_flows(n_flows, seed);

    // Train on a held-out prefix of modest size.
    let train_n = 4000.min(n_flows / 2);
    let schema: Vec<String> = crate::flow::FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::with_capacity(train_n);
    let mut labels = Vec::with_capacity(train_n);
    for (flow, label) in flows.iter().take(train_n) {
        rows.push(crate::flow::extract_features(flow).to_array().to_vec());
        labels.push(*label);
    }
    let train = LabeledDataset::new(schema, rows, labels);
    let stats = NormalizationStats::fit(&train.schema, &train.rows)
        .map_err(|e| IdsError::InvalidParams(e.to_string()))?;
    let normalized = normalize_dataset(&train, &stats)?;
    let forest = ForestModel::train(
        &normalized,
        &crate::ids::ForestParams {
            n_trees,
            tree: crate::ids::TreeParams {
                max_depth,
                ..Default::default()
            },
            bootstrap_fraction: 1.0,
            seed,
        },
    )?;
    let detector = Detector::new(
        vec![EnsembleMember {
            model: Model::Forest(forest),
            weight: 1.0,
        }],
        crate::ids::FusionMode::Soft,
        0.5,
        stats,
    )?;

    let start = std::time::Instant::now();
    let mut results = Vec::with_capacity(n_flows);
    for (flow, truth) in &flows {
        let features = crate::flow::extract_features(flow);
        let fused = detector
            .score(&features.to_array())
            .map_err(PipelineError::Ids)?;
        results.push((fused.label, *truth));
    }
    let wallclock_s = start.elapsed().as_secs_f64();

    let td = crate::metrics::throughput_and_drift(&results, wallclock_s, 4)?;
    let cm = ConfusionMatrix::from_pairs(&results);
    let stats = confusion_metrics(&cm)?;
    Ok(BenchOutput {
        flows_scored: n_flows,
        wallclock_s,
        flows_per_sec: td.flows_per_sec,
        drift_resilience_pct: td.drift_resilience_pct,
        accuracy_pct: stats.accuracy_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_flows_are_separable_by_the_detector() {
        let cfg = RunConfig {
            forest: crate::ids::ForestParams {
                n_trees: 10,
                ..Default::default()
            },
            boosted: crate::ids::BoostedParams {
                n_stages: 10,
                ..Default::default()
            },
            seed: 2,
            ..Default::default()
        };
        let flows = synthetic_flows(400, 3);
        let schema: Vec<String> = crate::flow::FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<f64>> = flows
            .iter()
            .map(|(f, _)| crate::flow::extract_features(f).to_array().to_vec())
            .collect();
        let labels: Vec<ClassLabel> = flows.iter().map(|(_, l)| *l).collect();
        let data = LabeledDataset::new(schema, rows, labels);
        let eval = evaluate_cv(&cfg, &data).unwrap();
        assert!(eval.accuracy_pct > 95.0, "accuracy {}", eval.accuracy_pct);
    }

    #[test]
    fn subsample_preserves_class_mix() {
        let flows = synthetic_flows(1000, 1);
        let schema: Vec<String> = crate::flow::FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<f64>> = flows
            .iter()
            .map(|(f, _)| crate::flow::extract_features(f).to_array().to_vec())
            .collect();
        let labels: Vec<ClassLabel> = flows.iter().map(|(_, l)| *l).collect();
        let data = LabeledDataset::new(schema, rows, labels);
        let sub = stratified_subsample(&data, 100, 7);
        assert!((95..=105).contains(&sub.len()), "got {}", sub.len());
        let normals = sub.labels.iter().filter(|l| !l.is_attack()).count();
        assert!((40..=60).contains(&normals));
    }
}
