//! The closed detection/enforcement loop.
//!
//! Packets stream through the switch while a tap feeds the flow table.
//! Periodic checks expire idle flows (and force long-lived flows through the
//! detection path), featurize and normalize them, classify, gate, and on an
//! alert: estimate severity, compile the enforcement rule, install it on the
//! switch, and seal the alert (with its action and QoS score) into the
//! ledger. Everything runs on the virtual clock; a run is a pure function of
//! (scenario, component configs, seed).

use super::clock::VirtualClock;
use super::events::{Event, EventLog, LogMeta};
use super::switch::{InstallLatencyModel, MatchOutcome, SwitchConfig, SwitchModel};
use super::traffic::{generate_traffic, ScenarioConfig};
use super::NetsimError;
use crate::flow::{extract_features, FlowKey, FlowState, FlowTable};
use crate::ids::{decide, Detector, FusedDecision, IdsError};
use crate::label::ClassLabel;
use crate::ledger::{
    ActionRecord, Chain, Directory, EndorsementPolicy, LedgerNode, LedgerNodeConfig,
    SigningIdentity, SubmitOutcome,
};
use crate::policy::{
    classify_severity, compile_rule, qos_score, reconcile_action, severity_score, PolicyConfig,
    QosInputs, QosThreatTerm, QueueClass, SeverityInputs,
};
use std::collections::BTreeMap;

/// Anything that can classify a completed flow. Production detectors fuse
/// model probabilities over the feature vector; test stubs may consult
/// ground truth through the flow key.
pub trait FlowDetector {
    fn classify(&self, key: &FlowKey, features: &[f64]) -> Result<FusedDecision, IdsError>;

    /// Alert threshold the gate applies when the scenario does not override it.
    fn theta(&self) -> f64 {
        0.5
    }
}

impl FlowDetector for Detector {
    fn classify(&self, _key: &FlowKey, features: &[f64]) -> Result<FusedDecision, IdsError> {
        self.score(features)
    }

    fn theta(&self) -> f64 {
        self.theta
    }
}

/// Perfect-detection stub: answers the ground-truth label with a fixed
/// confidence.
pub struct TruthOracleDetector {
    pub truth: BTreeMap<FlowKey, ClassLabel>,
    pub confidence: f64,
}

impl FlowDetector for TruthOracleDetector {
    fn classify(&self, key: &FlowKey, _features: &[f64]) -> Result<FusedDecision, IdsError> {
        let label = self.truth.get(key).copied().unwrap_or(ClassLabel::Normal);
        Ok(FusedDecision {
            label,
            score: self.confidence,
        })
    }
}

/// Stub that never raises an alert.
pub struct NeverAlertDetector;

impl FlowDetector for NeverAlertDetector {
    fn classify(&self, _key: &FlowKey, _features: &[f64]) -> Result<FusedDecision, IdsError> {
        Ok(FusedDecision {
            label: ClassLabel::Normal,
            score: 0.99,
        })
    }
}

#[derive(Debug)]
pub struct SimOutput {
    pub log: EventLog,
    pub chain: Chain,
    /// Submitter registry for verifying the produced chain.
    pub directory: Directory,
    pub warnings: Vec<String>,
}

struct LoopState<'a> {
    cfg: &'a ScenarioConfig,
    policy: &'a PolicyConfig,
    detector: &'a dyn FlowDetector,
    theta: f64,
    table: FlowTable,
    switch: SwitchModel,
    ledger: LedgerNode,
    log: EventLog,
    /// Recent alert timestamps per flow, for the severity rate term.
    alert_history: BTreeMap<FlowKey, Vec<f64>>,
}

impl LoopState<'_> {
    fn link_bytes_per_s(&self) -> f64 {
        self.cfg.link_mbps * 1_000_000.0 / 8.0
    }

    fn process_flows(&mut self, flows: Vec<FlowState>, now: f64) -> Result<(), NetsimError> {
        let detect_latency_s = self.cfg.detect_latency_ms / 1000.0;
        for (idx, flow) in flows.iter().enumerate() {
            let alert_ts = now + (idx as f64 + 1.0) * detect_latency_s;
            self.process_one(flow, alert_ts)
                .map_err(|e| e.at_event(alert_ts, &flow.key))?;
        }
        Ok(())
    }

    fn process_one(&mut self, flow: &FlowState, alert_ts: f64) -> Result<(), NetsimError> {
        let features = extract_features(flow);
        let raw = features.to_array();
        let decision = self.detector.classify(&flow.key, &raw)?;
        let flow_id = flow.key.render();
        let Some(alert) = decide(decision, self.theta, &flow_id, alert_ts) else {
            return Ok(());
        };
        self.log.push(Event::AlertRaised {
            ts: alert.timestamp,
            flow: flow_id.clone(),
            label: alert.label,
            confidence: alert.confidence,
        });

        // Severity and QoS context for this alert.
        let history = self.alert_history.entry(flow.key).or_default();
        history.retain(|t| alert_ts - *t <= 60.0);
        history.push(alert_ts);
        let alert_rate_per_min = history.len() as f64;

        let severity = classify_severity(alert.confidence, &self.policy.thresholds)?;
        let t_sev = severity_score(
            &SeverityInputs {
                src_bandwidth: features.byte_rate,
                total_bandwidth: self.link_bytes_per_s(),
                confidence: alert.confidence,
                alert_rate_per_min,
                port_entropy_bits: features.dst_port_entropy,
            },
            &self.policy.severity_weights,
        )?;
        let threat_level = match self.policy.qos_threat_term {
            QosThreatTerm::Severity => t_sev,
            QosThreatTerm::Confidence => alert.confidence,
        };
        let app_priority = self
            .log
            .meta
            .flow_apps
            .get(&flow_id)
            .and_then(|name| {
                crate::policy::AppKind::ALL
                    .iter()
                    .find(|a| a.name() == name)
                    .copied()
            })
            .map(|a| a.default_priority())
            .unwrap_or(0.2);
        let qos = qos_score(
            &QosInputs {
                app_priority,
                latency_ms: self.switch.queue_delay_ms(QueueClass::Low, alert_ts),
                threat_level,
                bandwidth_usage: (features.byte_rate / self.link_bytes_per_s()).clamp(0.0, 1.0),
            },
            &self.policy.qos_weights,
        )?;

        let action = reconcile_action(severity, self.policy.table.lookup(alert.label));
        let rule = compile_rule(flow.key, severity, action)?;

        let submitted = self.ledger.submit(
            &alert,
            Some(&ActionRecord {
                action: action.name().to_string(),
                qos_score: qos,
            }),
            alert_ts,
        )?;
        if let SubmitOutcome::Accepted(txn) = submitted {
            self.log.push(Event::TxnSubmitted {
                ts: alert_ts,
                id: hex::encode(txn.digest),
                flow: flow_id.clone(),
            });
        }

        if self.cfg.enforce && !self.switch.has_equivalent_rule(&rule) {
            let action_name = action.name().to_string();
            let priority = rule.priority;
            let (applied_ts, latency_ms) = self.switch.install_rule(rule, alert_ts)?;
            self.log.push(Event::RuleInstalled {
                ts: applied_ts,
                flow: flow_id,
                action: action_name,
                priority,
                requested_ts: alert_ts,
                latency_ms,
            });
        }
        Ok(())
    }

    fn check_expiry(&mut self, now: f64) -> Result<(), NetsimError> {
        let mut due = self.table.expire_idle(now, self.cfg.flow_timeout_s);
        due.extend(self.table.expire_aged(now, self.cfg.active_timeout_s));
        due.sort_by(|a, b| {
            a.last_ts
                .partial_cmp(&b.last_ts)
                .expect("finite")
                .then_with(|| a.key.cmp(&b.key))
        });
        self.process_flows(due, now)?;
        self.commit_due(now);
        Ok(())
    }

    fn commit_due(&mut self, now: f64) {
        for block in self.ledger.tick(now) {
            self.push_commit_events(&block);
        }
    }

    fn push_commit_events(&mut self, block: &crate::ledger::Block) {
        for txn in &block.transactions {
            let flow = crate::ledger::parse_payload(&txn.payload)
                .map(|p| p.flow_id)
                .unwrap_or_default();
            self.log.push(Event::TxnCommitted {
                ts: block.commit_ts,
                id: hex::encode(txn.digest),
                flow,
                block: block.index,
            });
        }
    }
}

/// Run the full pipeline over a scenario. Deterministic for fixed inputs.
pub fn run_closed_loop(
    cfg: &ScenarioConfig,
    detector: &dyn FlowDetector,
    policy: &PolicyConfig,
    config_hash: &str,
) -> Result<SimOutput, NetsimError> {
    cfg.validate()?;
    let traffic = generate_traffic(cfg)?;
    let theta = cfg.theta.unwrap_or_else(|| detector.theta());

    let mut meta = LogMeta {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        enforce: cfg.enforce,
        config_hash: config_hash.to_string(),
        duration_s: cfg.duration_s,
        window: cfg.measure_window.unwrap_or((0.0, cfg.duration_s)),
        flow_apps: BTreeMap::new(),
        flow_truth: BTreeMap::new(),
    };
    for (key, class) in &traffic.truth {
        let id = key.render();
        if let Some(app) = class.app {
            meta.flow_apps.insert(id.clone(), app.name().to_string());
        }
        meta.flow_truth.insert(id, class.label.name().to_string());
    }

    let switch = SwitchModel::new(SwitchConfig {
        link_mbps: cfg.link_mbps,
        high_share: cfg.high_queue_share,
        queue_capacity_bytes: cfg.queue_capacity_bytes,
        rule_capacity: cfg.rule_capacity,
        install_latency: InstallLatencyModel {
            mean_ms: cfg.install_latency_mean_ms,
            jitter: cfg.install_latency_jitter,
        },
        meter_burst_bytes: 16_000.0,
        seed: cfg.seed ^ 0x5753_4954_4348, // distinct stream for the switch
    });

    let signer = SigningIdentity::derive("ids-node", cfg.seed);
    let policy_endorse = EndorsementPolicy::new(cfg.ledger.peers, cfg.ledger.required)?;
    let ledger = LedgerNode::new(
        LedgerNodeConfig {
            theta,
            block_size: cfg.ledger.block_size,
            block_timeout_s: cfg.ledger.block_timeout_s,
            ordering_delay_s: cfg.ledger.ordering_delay_ms / 1000.0,
        },
        signer,
        policy_endorse,
    );

    let mut state = LoopState {
        cfg,
        policy,
        detector,
        theta,
        table: FlowTable::new(),
        switch,
        ledger,
        log: EventLog::new(meta),
        alert_history: BTreeMap::new(),
    };

    let mut clock = VirtualClock::new();
    let interval = cfg.expiry_check_interval_s.max(1e-3);
    let mut next_check = interval;
    for p in &traffic.packets {
        while next_check <= p.ts && next_check <= cfg.duration_s {
            clock.advance_to(next_check);
            state.check_expiry(next_check)?;
            next_check += interval;
        }
        clock.advance_to(p.ts);
        let flow_id = FlowKey::of_packet(p).render();
        match state.switch.match_and_forward(p, p.ts) {
            MatchOutcome::Delivered { queue, .. } => {
                let queue = match queue {
                    QueueClass::High => "high",
                    QueueClass::Low => "low",
                };
                state.log.push(Event::PacketDelivered {
                    ts: p.ts,
                    flow: flow_id,
                    bytes: p.length,
                    queue: queue.to_string(),
                });
            }
            MatchOutcome::Redirected => {
                state.log.push(Event::PacketRedirected {
                    ts: p.ts,
                    flow: flow_id,
                    bytes: p.length,
                });
            }
            MatchOutcome::Dropped { reason } => {
                state.log.push(Event::PacketDropped {
                    ts: p.ts,
                    flow: flow_id,
                    bytes: p.length,
                    reason,
                });
            }
        }
        // Detection tap: the flow engine observes every offered packet.
        state.table.ingest(p)?;
    }
    while next_check <= cfg.duration_s {
        clock.advance_to(next_check);
        state.check_expiry(next_check)?;
        next_check += interval;
    }
    clock.advance_to(cfg.duration_s);
    let remaining = state.table.flush();
    state.process_flows(remaining, cfg.duration_s)?;
    for block in state.ledger.flush(cfg.duration_s) {
        state.push_commit_events(&block);
    }

    state.log.finalize();
    let directory = state.ledger.directory();
    Ok(SimOutput {
        log: state.log,
        chain: state.ledger.chain,
        directory,
        warnings: traffic.warnings,
    })
}
