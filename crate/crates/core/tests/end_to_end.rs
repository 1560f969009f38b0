//! Whole-pipeline integration: harvest labeled flow features from one
//! simulated trace, train the native ensemble on them, deploy the trained
//! detector inside the closed loop on a different seed, and check that it
//! drops the attack without touching benign traffic.

use secflow::config::RunConfig;
use secflow::dataset::LabeledDataset;
use secflow::flow::{extract_features, FlowTable, FEATURE_NAMES};
use secflow::ids::{BoostedParams, ForestParams};
use secflow::label::ClassLabel;
use secflow::netsim::{
    generate_traffic, run_closed_loop, AppTraffic, AttackSpec, Event, LedgerParams, ScenarioConfig,
};
use secflow::pipeline::build_detector;
use secflow::policy::{AppKind, PolicyConfig};

fn scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        name: "e2e".into(),
        duration_s: 10.0,
        link_mbps: 2.5,
        seed,
        apps: vec![
            AppTraffic {
                app: AppKind::Voip,
                rate_kbps: 800.0,
                packet_bytes: 200,
                flows: 3,
            },
            AppTraffic {
                app: AppKind::Dns,
                rate_kbps: 64.0,
                packet_bytes: 120,
                flows: 2,
            },
        ],
        attack: Some(AttackSpec {
            kind: ClassLabel::DDoS,
            start_s: 1.0,
            end_s: None,
            intensity_mbps: 20.0,
            sources: 4,
            packet_bytes: 160,
        }),
        enforce: true,
        flow_timeout_s: 5.0,
        active_timeout_s: 1.0,
        expiry_check_interval_s: 0.25,
        detect_latency_ms: 1.0,
        theta: None,
        high_queue_share: 0.3,
        queue_capacity_bytes: 65_536.0,
        rule_capacity: 4096,
        install_latency_mean_ms: 24.8,
        install_latency_jitter: 0.3,
        ledger: LedgerParams::default(),
        measure_window: None,
    }
}

/// Replay a trace through the flow engine the way the loop does (periodic
/// idle + age expiry) and label each completed flow segment from ground
/// truth.
fn harvest_features(cfg: &ScenarioConfig) -> LabeledDataset {
    let traffic = generate_traffic(cfg).unwrap();
    let mut table = FlowTable::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut next_check = cfg.expiry_check_interval_s;
    let mut harvest = |flows: Vec<secflow::flow::FlowState>| {
        for flow in flows {
            let label = traffic
                .truth
                .get(&flow.key)
                .map(|t| t.label)
                .unwrap_or(ClassLabel::Normal);
            rows.push(extract_features(&flow).to_array().to_vec());
            labels.push(label);
        }
    };
    for p in &traffic.packets {
        while next_check <= p.ts {
            let mut due = table.expire_idle(next_check, cfg.flow_timeout_s);
            due.extend(table.expire_aged(next_check, cfg.active_timeout_s));
            harvest(due);
            next_check += cfg.expiry_check_interval_s;
        }
        table.ingest(p).unwrap();
    }
    harvest(table.flush());
    let schema: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    LabeledDataset::new(schema, rows, labels)
}

#[test]
fn trained_ensemble_drives_the_closed_loop() {
    // Train on seed 100 traffic, deploy on seed 200 traffic.
    let train_data = harvest_features(&scenario(100));
    assert!(
        train_data.len() > 50,
        "training harvest too small: {}",
        train_data.len()
    );
    assert!(train_data.labels.iter().any(|l| l.is_attack()));
    assert!(train_data.labels.iter().any(|l| !l.is_attack()));

    let run_cfg = RunConfig {
        seed: 5,
        forest: ForestParams {
            n_trees: 15,
            ..Default::default()
        },
        boosted: BoostedParams {
            n_stages: 15,
            ..Default::default()
        },
        ..Default::default()
    };
    let detector = build_detector(&run_cfg, &train_data).unwrap();

    let deploy = scenario(200);
    let truth = generate_traffic(&deploy).unwrap().truth;
    let out = run_closed_loop(&deploy, &detector, &PolicyConfig::default(), "e2e").unwrap();

    let attack_flows: Vec<String> = truth
        .iter()
        .filter(|(_, t)| t.label.is_attack())
        .map(|(k, _)| k.render())
        .collect();
    let benign_flows: Vec<String> = truth
        .iter()
        .filter(|(_, t)| !t.label.is_attack())
        .map(|(k, _)| k.render())
        .collect();

    // Every attack flow ends up behind an enforcement rule.
    for flow in &attack_flows {
        assert!(
            out.log
                .events
                .iter()
                .any(|e| matches!(e, Event::RuleInstalled { flow: f, .. } if f == flow)),
            "attack flow {flow} never got a rule"
        );
    }
    // No benign flow is touched by enforcement on this easy mix.
    for flow in &benign_flows {
        assert!(
            !out.log
                .events
                .iter()
                .any(|e| matches!(e, Event::RuleInstalled { flow: f, .. } if f == flow)),
            "benign flow {flow} was hit by a rule"
        );
    }
    // Alerts got sealed, endorsed, committed, and the chain verifies.
    assert!(out.chain.committed_txn_count() > 0);
    assert!(out.chain.verify(&out.directory).is_ok());
    // Attack traffic was actually suppressed after detection.
    let dropped_attack_bytes: u64 = out
        .log
        .events
        .iter()
        .filter_map(|e| match e {
            Event::PacketDropped { flow, bytes, .. } if attack_flows.contains(flow) => Some(*bytes),
            _ => None,
        })
        .sum();
    assert!(dropped_attack_bytes > 0);
}
