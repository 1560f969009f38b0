//! Synthetic traffic generation.
//!
//! Every flow derives its own RNG stream from the scenario seed and its
//! identity, so the benign mix is byte-identical whether or not an attack is
//! configured, and any run is reproducible from (scenario, seed) alone.

use super::NetsimError;
use crate::flow::{FlowKey, PacketRecord, Protocol};
use crate::label::ClassLabel;
use crate::policy::AppKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppTraffic {
    pub app: AppKind,
    /// Aggregate application rate, kilobits/second.
    pub rate_kbps: f64,
    pub packet_bytes: u64,
    /// Number of concurrent flows carrying the aggregate rate.
    pub flows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: ClassLabel,
    pub start_s: f64,
    /// Attack end; defaults to the scenario end.
    pub end_s: Option<f64>,
    /// Aggregate attack intensity, megabits/second.
    pub intensity_mbps: f64,
    pub sources: usize,
    #[serde(default = "default_attack_packet_bytes")]
    pub packet_bytes: u64,
}

fn default_attack_packet_bytes() -> u64 {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerParams {
    pub block_size: usize,
    pub block_timeout_s: f64,
    pub peers: usize,
    pub required: usize,
    pub ordering_delay_ms: f64,
}

impl Default for LedgerParams {
    fn default() -> LedgerParams {
        LedgerParams {
            block_size: 10,
            block_timeout_s: 2.0,
            peers: 2,
            required: 2,
            ordering_delay_ms: 5.0,
        }
    }
}

/// Everything a simulation run needs; the seed fixes all randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_s: f64,
    pub link_mbps: f64,
    pub seed: u64,
    pub apps: Vec<AppTraffic>,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    #[serde(default = "default_true")]
    pub enforce: bool,
    #[serde(default = "default_flow_timeout")]
    pub flow_timeout_s: f64,
    /// Age at which long-lived flows are force-expired through the detection
    /// path while still active.
    #[serde(default = "default_active_timeout")]
    pub active_timeout_s: f64,
    #[serde(default = "default_check_interval")]
    pub expiry_check_interval_s: f64,
    /// Inference latency charged to the virtual clock per scored flow.
    #[serde(default = "default_detect_latency")]
    pub detect_latency_ms: f64,
    /// Alert threshold; falls back to the detector's own threshold.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_high_share")]
    pub high_queue_share: f64,
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity_bytes: f64,
    #[serde(default = "default_rule_capacity")]
    pub rule_capacity: usize,
    #[serde(default = "default_install_mean")]
    pub install_latency_mean_ms: f64,
    #[serde(default = "default_install_jitter")]
    pub install_latency_jitter: f64,
    #[serde(default)]
    pub ledger: LedgerParams,
    /// QoS measurement window; defaults to the full run.
    #[serde(default)]
    pub measure_window: Option<(f64, f64)>,
}

fn default_true() -> bool {
    true
}
fn default_flow_timeout() -> f64 {
    5.0
}
fn default_active_timeout() -> f64 {
    5.0
}
fn default_check_interval() -> f64 {
    0.25
}
fn default_detect_latency() -> f64 {
    1.0
}
fn default_high_share() -> f64 {
    0.3
}
fn default_queue_capacity() -> f64 {
    65_536.0
}
fn default_rule_capacity() -> usize {
    4096
}
fn default_install_mean() -> f64 {
    24.8
}
fn default_install_jitter() -> f64 {
    0.3
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<ScenarioConfig, NetsimError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| NetsimError::InvalidScenario(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(NetsimError::InvalidScenario(
                "duration_s must be > 0".into(),
            ));
        }
        if !self.link_mbps.is_finite() || self.link_mbps <= 0.0 {
            return Err(NetsimError::InvalidScenario("link_mbps must be > 0".into()));
        }
        if self
            .apps
            .iter()
            .any(|a| a.rate_kbps < 0.0 || a.flows == 0 || a.packet_bytes == 0)
        {
            return Err(NetsimError::InvalidScenario(
                "invalid app traffic entry".into(),
            ));
        }
        // Source/flow counts share the port space carved out below.
        if self.apps.iter().any(|a| a.flows > 10_000) {
            return Err(NetsimError::InvalidScenario(
                "app flow count exceeds 10000".into(),
            ));
        }
        if let Some(attack) = &self.attack {
            if attack.intensity_mbps < 0.0 || attack.sources == 0 || attack.sources > 10_000 {
                return Err(NetsimError::InvalidScenario("invalid attack spec".into()));
            }
        }
        Ok(())
    }

    /// Peak offered load in Mbps (benign + attack).
    pub fn offered_mbps(&self) -> f64 {
        let benign: f64 = self.apps.iter().map(|a| a.rate_kbps / 1000.0).sum();
        benign + self.attack.as_ref().map_or(0.0, |a| a.intensity_mbps)
    }
}

/// Ground truth for one generated flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficClass {
    pub app: Option<AppKind>,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTraffic {
    pub packets: Vec<PacketRecord>,
    pub truth: BTreeMap<FlowKey, TrafficClass>,
    pub warnings: Vec<String>,
}

fn stream_seed(scenario_seed: u64, tag: &str, a: u64, b: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(scenario_seed.to_be_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(a.to_be_bytes());
    hasher.update(b.to_be_bytes());
    let out: [u8; 32] = hasher.finalize().into();
    u64::from_be_bytes(out[..8].try_into().unwrap())
}

fn app_server(app: AppKind) -> (Ipv4Addr, u16) {
    match app {
        AppKind::Voip => (Ipv4Addr::new(10, 99, 0, 1), 7078),
        AppKind::Video => (Ipv4Addr::new(10, 99, 0, 2), 8554),
        AppKind::Dns => (Ipv4Addr::new(10, 99, 0, 3), 53),
        AppKind::Web => (Ipv4Addr::new(10, 99, 0, 4), 443),
        AppKind::Bulk => (Ipv4Addr::new(10, 99, 0, 5), 8080),
    }
}

/// Emit one constant-rate packet stream with +/-10% per-packet spacing jitter.
#[allow(clippy::too_many_arguments)]
fn emit_stream(
    out: &mut Vec<PacketRecord>,
    rng: &mut ChaCha8Rng,
    src: (Ipv4Addr, u16),
    dst: (Ipv4Addr, u16),
    protocol: Protocol,
    packet_bytes: u64,
    rate_bytes_per_s: f64,
    start_s: f64,
    end_s: f64,
) {
    if rate_bytes_per_s <= 0.0 || end_s <= start_s {
        return;
    }
    let interval = packet_bytes as f64 / rate_bytes_per_s;
    let mut base = start_s + rng.gen_range(0.0..interval);
    while base < end_s {
        let jitter = rng.gen_range(-0.1..0.1) * interval;
        let ts = (base + jitter).max(start_s);
        if ts < end_s {
            out.push(PacketRecord {
                ts,
                src_ip: src.0,
                dst_ip: dst.0,
                src_port: src.1,
                dst_port: dst.1,
                protocol,
                length: packet_bytes,
                tcp_flags: None,
            });
        }
        base += interval;
    }
}

/// Generate the packet trace and ground truth for a scenario.
pub fn generate_traffic(cfg: &ScenarioConfig) -> Result<GeneratedTraffic, NetsimError> {
    cfg.validate()?;
    let mut packets = Vec::new();
    let mut truth = BTreeMap::new();
    let mut warnings = Vec::new();

    if cfg.offered_mbps() > 3.0 * cfg.link_mbps {
        warnings.push(format!(
            "OverCapacityConfig: offered {:.1} Mbps exceeds 3x link capacity {:.1} Mbps",
            cfg.offered_mbps(),
            cfg.link_mbps
        ));
    }

    for (app_idx, app) in cfg.apps.iter().enumerate() {
        let per_flow_rate = app.rate_kbps * 1000.0 / 8.0 / app.flows as f64;
        let dst = app_server(app.app);
        for flow_idx in 0..app.flows {
            let src = (
                Ipv4Addr::new(10, 0, app_idx as u8, 10 + (flow_idx % 240) as u8),
                40_000 + flow_idx as u16,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                cfg.seed,
                "benign",
                app_idx as u64,
                flow_idx as u64,
            ));
            let protocol = if app.app == AppKind::Dns {
                Protocol::Udp
            } else {
                Protocol::Tcp
            };
            emit_stream(
                &mut packets,
                &mut rng,
                src,
                dst,
                protocol,
                app.packet_bytes,
                per_flow_rate,
                0.0,
                cfg.duration_s,
            );
            let key = FlowKey::new(src.0, src.1, dst.0, dst.1, protocol);
            truth.insert(
                key,
                TrafficClass {
                    app: Some(app.app),
                    label: ClassLabel::Normal,
                },
            );
        }
    }

    if let Some(attack) = &cfg.attack {
        if attack.intensity_mbps > 0.0 {
            let end = attack.end_s.unwrap_or(cfg.duration_s).min(cfg.duration_s);
            let per_source = attack.intensity_mbps * 1_000_000.0 / 8.0 / attack.sources as f64;
            let victim = (Ipv4Addr::new(10, 99, 0, 1), 80);
            for s in 0..attack.sources {
                let src = (
                    Ipv4Addr::new(10, 66, (s / 240) as u8, 1 + (s % 240) as u8),
                    50_000 + s as u16,
                );
                let mut rng =
                    ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, "attack", s as u64, 0));
                emit_stream(
                    &mut packets,
                    &mut rng,
                    src,
                    victim,
                    Protocol::Tcp,
                    attack.packet_bytes,
                    per_source,
                    attack.start_s,
                    end,
                );
                let key = FlowKey::new(src.0, src.1, victim.0, victim.1, Protocol::Tcp);
                truth.insert(
                    key,
                    TrafficClass {
                        app: None,
                        label: attack.kind,
                    },
                );
            }
        }
    }

    packets.sort_by(|a, b| {
        a.ts.partial_cmp(&b.ts)
            .expect("finite timestamps")
            .then_with(|| (a.src_ip, a.src_port).cmp(&(b.src_ip, b.src_port)))
            .then_with(|| (a.dst_ip, a.dst_port).cmp(&(b.dst_ip, b.dst_port)))
    });
    Ok(GeneratedTraffic {
        packets,
        truth,
        warnings,
    })
}
