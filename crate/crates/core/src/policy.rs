//! Alert-to-action policy: severity estimation, QoS scoring, and flow-rule
//! compilation.
//!
//! Severity blends four bounded terms: a log-scaled bandwidth share (three
//! decades, clamped to [0,1]), the detector confidence, an alert-rate term
//! normalized at 10 alerts/minute, and a port-entropy term normalized at 16
//! bits. The composite QoS score weighs application priority, a capped
//! latency term `1/(1 + l/50ms)`, the inverted threat level, and bandwidth
//! usage. Rule compilation reproduces the fixed enforcement table: malicious
//! flows are dropped (priority 100) or redirected to the honeypot (90),
//! suspicious flows are forwarded through a 1 Mbps meter on the low queue
//! (60), and safe flows ride the high queue (40).

use crate::flow::FlowKey;
use crate::label::ClassLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Alert-rate normalization ceiling: alerts/minute mapping to 1.0.
pub const RATE_CEILING_PER_MIN: f64 = 10.0;
/// Entropy normalization ceiling in bits (log2 of the port space).
pub const ENTROPY_CEILING_BITS: f64 = 16.0;
/// Latency half-point for the capped QoS latency term, milliseconds.
pub const LATENCY_SCALE_MS: f64 = 50.0;
/// Meter rate installed on suspicious flows, bits/second.
pub const SUSPICIOUS_METER_BPS: f64 = 1_000_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("InvalidThresholds: need 0 < medium < high <= 1, got medium {medium}, high {high}")]
    InvalidThresholds { medium: f64, high: f64 },
    #[error("InconsistentDecision: severity {severity:?} with action {action:?}")]
    InconsistentDecision {
        severity: SeverityClass,
        action: NetworkAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkAction {
    Drop,
    RedirectHoneypot,
    RateLimit,
    Prioritize,
}

impl NetworkAction {
    pub fn name(self) -> &'static str {
        match self {
            NetworkAction::Drop => "drop",
            NetworkAction::RedirectHoneypot => "redirect-honeypot",
            NetworkAction::RateLimit => "rate-limit",
            NetworkAction::Prioritize => "prioritize",
        }
    }
}

/// Flow severity classes, ordered: Malicious > Suspicious > Safe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeverityClass {
    Safe,
    Suspicious,
    Malicious,
}

/// Attack label -> network action, with a default for unmapped labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub actions: BTreeMap<ClassLabel, NetworkAction>,
    pub default_action: NetworkAction,
}

impl Default for PolicyTable {
    fn default() -> PolicyTable {
        let actions = BTreeMap::from([
            (ClassLabel::DDoS, NetworkAction::Drop),
            (ClassLabel::DoS, NetworkAction::Drop),
            (ClassLabel::Botnet, NetworkAction::Drop),
            (ClassLabel::Exploit, NetworkAction::RedirectHoneypot),
            (ClassLabel::WebAttack, NetworkAction::RedirectHoneypot),
            (ClassLabel::Probe, NetworkAction::RateLimit),
            (ClassLabel::BruteForce, NetworkAction::RateLimit),
            (ClassLabel::Normal, NetworkAction::Prioritize),
        ]);
        // Unknown labels take the degraded path rather than full trust or
        // full block.
        PolicyTable {
            actions,
            default_action: NetworkAction::RateLimit,
        }
    }
}

impl PolicyTable {
    pub fn lookup(&self, label: ClassLabel) -> NetworkAction {
        self.actions
            .get(&label)
            .copied()
            .unwrap_or(self.default_action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityInputs {
    /// Suspicious source bandwidth, bytes/second.
    pub src_bandwidth: f64,
    /// Total (link) bandwidth, bytes/second; must be positive.
    pub total_bandwidth: f64,
    /// Detector confidence in [0,1].
    pub confidence: f64,
    /// Recent alerts per minute from this source, >= 0.
    pub alert_rate_per_min: f64,
    /// Destination-port entropy, bits, >= 0.
    pub port_entropy_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityWeights {
    pub bandwidth: f64,
    pub confidence: f64,
    pub rate: f64,
    pub entropy: f64,
}

impl Default for SeverityWeights {
    fn default() -> SeverityWeights {
        SeverityWeights {
            bandwidth: 0.2,
            confidence: 0.4,
            rate: 0.2,
            entropy: 0.2,
        }
    }
}

impl SeverityWeights {
    pub fn normalized(&self) -> Result<SeverityWeights, PolicyError> {
        let sum = self.bandwidth + self.confidence + self.rate + self.entropy;
        if !sum.is_finite()
            || sum <= 0.0
            || [self.bandwidth, self.confidence, self.rate, self.entropy]
                .iter()
                .any(|w| *w < 0.0 || !w.is_finite())
        {
            return Err(PolicyError::InvalidInput(
                "severity weights must be >= 0 with a positive sum".into(),
            ));
        }
        Ok(SeverityWeights {
            bandwidth: self.bandwidth / sum,
            confidence: self.confidence / sum,
            rate: self.rate / sum,
            entropy: self.entropy / sum,
        })
    }
}

/// Threat severity in [0,1].
///
/// `b = clamp(1 + log10(src/total)/3, 0, 1)`, `r = min(rate/10, 1)`,
/// `h = entropy/16`, result `clamp(a*b + B*conf + g*r + d*h, 0, 1)` with
/// normalized weights.
pub fn severity_score(
    inputs: &SeverityInputs,
    weights: &SeverityWeights,
) -> Result<f64, PolicyError> {
    if !inputs.total_bandwidth.is_finite() || inputs.total_bandwidth <= 0.0 {
        return Err(PolicyError::InvalidInput(format!(
            "total_bandwidth must be > 0, got {}",
            inputs.total_bandwidth
        )));
    }
    if inputs.src_bandwidth < 0.0 {
        return Err(PolicyError::InvalidInput(
            "src_bandwidth must be >= 0".into(),
        ));
    }
    let w = weights.normalized()?;
    let ratio = inputs.src_bandwidth / inputs.total_bandwidth;
    let bandwidth_term = if ratio > 0.0 {
        (1.0 + ratio.log10() / 3.0).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let rate_term = (inputs.alert_rate_per_min / RATE_CEILING_PER_MIN).min(1.0);
    let entropy_term = (inputs.port_entropy_bits / ENTROPY_CEILING_BITS).min(1.0);
    let score = w.bandwidth * bandwidth_term
        + w.confidence * inputs.confidence
        + w.rate * rate_term
        + w.entropy * entropy_term;
    Ok(score.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosThresholds {
    pub high: f64,
    pub medium: f64,
}

impl Default for QosThresholds {
    fn default() -> QosThresholds {
        QosThresholds {
            high: 0.85,
            medium: 0.60,
        }
    }
}

impl QosThresholds {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(0.0 < self.medium && self.medium < self.high && self.high <= 1.0) {
            return Err(PolicyError::InvalidThresholds {
                medium: self.medium,
                high: self.high,
            });
        }
        Ok(())
    }
}

/// Confidence >= high -> Malicious; >= medium -> Suspicious; else Safe.
/// Boundaries are inclusive.
pub fn classify_severity(
    confidence: f64,
    thresholds: &QosThresholds,
) -> Result<SeverityClass, PolicyError> {
    thresholds.validate()?;
    Ok(if confidence >= thresholds.high {
        SeverityClass::Malicious
    } else if confidence >= thresholds.medium {
        SeverityClass::Suspicious
    } else {
        SeverityClass::Safe
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosInputs {
    /// Application priority in [0,1].
    pub app_priority: f64,
    /// Current flow latency, milliseconds, >= 0.
    pub latency_ms: f64,
    /// Threat level in [0,1]: severity by default, raw confidence when
    /// configured (both readings of the source formulas are supported).
    pub threat_level: f64,
    /// Bandwidth usage fraction in [0,1].
    pub bandwidth_usage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosWeights {
    pub app_priority: f64,
    pub latency: f64,
    pub threat: f64,
    pub bandwidth: f64,
}

impl Default for QosWeights {
    fn default() -> QosWeights {
        QosWeights {
            app_priority: 0.4,
            latency: 0.2,
            threat: 0.3,
            bandwidth: 0.1,
        }
    }
}

impl QosWeights {
    pub fn normalized(&self) -> Result<QosWeights, PolicyError> {
        let sum = self.app_priority + self.latency + self.threat + self.bandwidth;
        if !sum.is_finite()
            || sum <= 0.0
            || [self.app_priority, self.latency, self.threat, self.bandwidth]
                .iter()
                .any(|w| *w < 0.0 || !w.is_finite())
        {
            return Err(PolicyError::InvalidInput(
                "qos weights must be >= 0 with a positive sum".into(),
            ));
        }
        Ok(QosWeights {
            app_priority: self.app_priority / sum,
            latency: self.latency / sum,
            threat: self.threat / sum,
            bandwidth: self.bandwidth / sum,
        })
    }
}

/// Composite QoS score in [0,1]. The latency term is `1/(1 + l/50ms)` so it
/// stays finite at zero latency.
pub fn qos_score(inputs: &QosInputs, weights: &QosWeights) -> Result<f64, PolicyError> {
    let w = weights.normalized()?;
    let latency_term = 1.0 / (1.0 + inputs.latency_ms.max(0.0) / LATENCY_SCALE_MS);
    let score = w.app_priority * inputs.app_priority.clamp(0.0, 1.0)
        + w.latency * latency_term
        + w.threat * (1.0 - inputs.threat_level.clamp(0.0, 1.0))
        + w.bandwidth * inputs.bandwidth_usage.clamp(0.0, 1.0);
    Ok(score.clamp(0.0, 1.0))
}

/// Which value feeds the QoS threat term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QosThreatTerm {
    #[default]
    Severity,
    Confidence,
}

/// Queue assignment on forwarded flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueClass {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleAction {
    Drop,
    OutputHoneypot,
    Forward,
}

/// A compiled match-action switch rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRule {
    pub match_key: FlowKey,
    pub action: RuleAction,
    pub priority: u32,
    /// Token-bucket rate in bits/second, when metered.
    pub meter_bps: Option<f64>,
    pub queue: Option<QueueClass>,
}

/// Compile the enforcement rule for a classified flow.
///
/// The (severity x action) table:
/// - Malicious + Drop             -> drop, priority 100
/// - Malicious + RedirectHoneypot -> output:honeypot, priority 90
/// - Suspicious + any action      -> forward, 1 Mbps meter, low queue, priority 60
/// - Safe + RateLimit/Prioritize  -> forward, high queue, priority 40
///
/// Malicious with a non-containment action and Safe with Drop/Redirect are
/// inconsistent decisions (a misconfigured policy table) and error.
pub fn compile_rule(
    flow: FlowKey,
    severity: SeverityClass,
    action: NetworkAction,
) -> Result<FlowRule, PolicyError> {
    match (severity, action) {
        (SeverityClass::Malicious, NetworkAction::Drop) => Ok(FlowRule {
            match_key: flow,
            action: RuleAction::Drop,
            priority: 100,
            meter_bps: None,
            queue: None,
        }),
        (SeverityClass::Malicious, NetworkAction::RedirectHoneypot) => Ok(FlowRule {
            match_key: flow,
            action: RuleAction::OutputHoneypot,
            priority: 90,
            meter_bps: None,
            queue: None,
        }),
        (SeverityClass::Malicious, _) => {
            Err(PolicyError::InconsistentDecision { severity, action })
        }
        (SeverityClass::Suspicious, _) => Ok(FlowRule {
            match_key: flow,
            action: RuleAction::Forward,
            priority: 60,
            meter_bps: Some(SUSPICIOUS_METER_BPS),
            queue: Some(QueueClass::Low),
        }),
        (SeverityClass::Safe, NetworkAction::Drop | NetworkAction::RedirectHoneypot) => {
            Err(PolicyError::InconsistentDecision { severity, action })
        }
        (SeverityClass::Safe, _) => Ok(FlowRule {
            match_key: flow,
            action: RuleAction::Forward,
            priority: 40,
            meter_bps: None,
            queue: Some(QueueClass::High),
        }),
    }
}

/// Reconcile a policy-table action with the classified severity so the pair
/// always compiles: malicious flows fall back to Drop when the table asks
/// for a non-containment action, and safe flows fall back to Prioritize.
pub fn reconcile_action(severity: SeverityClass, action: NetworkAction) -> NetworkAction {
    match (severity, action) {
        (SeverityClass::Malicious, NetworkAction::RateLimit | NetworkAction::Prioritize) => {
            NetworkAction::Drop
        }
        (SeverityClass::Safe, NetworkAction::Drop | NetworkAction::RedirectHoneypot) => {
            NetworkAction::Prioritize
        }
        _ => action,
    }
}

/// Application priority scale: interactive voice first, bulk last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppKind {
    Voip,
    Video,
    Dns,
    Web,
    Bulk,
}

impl AppKind {
    pub const ALL: [AppKind; 5] = [
        AppKind::Voip,
        AppKind::Video,
        AppKind::Dns,
        AppKind::Web,
        AppKind::Bulk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AppKind::Voip => "voip",
            AppKind::Video => "video",
            AppKind::Dns => "dns",
            AppKind::Web => "web",
            AppKind::Bulk => "bulk",
        }
    }

    pub fn default_priority(self) -> f64 {
        match self {
            AppKind::Voip => 1.0,
            AppKind::Video => 0.8,
            AppKind::Dns => 0.6,
            AppKind::Web => 0.4,
            AppKind::Bulk => 0.2,
        }
    }
}

/// Full policy configuration loaded from the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    #[serde(default)]
    pub table: PolicyTable,
    #[serde(default)]
    pub severity_weights: SeverityWeights,
    #[serde(default)]
    pub qos_weights: QosWeights,
    #[serde(default)]
    pub thresholds: QosThresholds,
    #[serde(default)]
    pub qos_threat_term: QosThreatTerm,
}

impl Default for PolicyConfig {
    fn default() -> PolicyConfig {
        PolicyConfig {
            table: PolicyTable::default(),
            severity_weights: SeverityWeights::default(),
            qos_weights: QosWeights::default(),
            thresholds: QosThresholds::default(),
            qos_threat_term: QosThreatTerm::Severity,
        }
    }
}
