//! The simulated switch: priority rule matching, token-bucket meters, and
//! two fluid service queues with strict high-over-low priority shares.

use super::events::DropReason;
use super::NetsimError;
use crate::flow::{FlowKey, PacketRecord};
use crate::policy::{FlowRule, QueueClass, RuleAction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstallLatencyModel {
    pub mean_ms: f64,
    /// Uniform jitter as a fraction of the mean, in [0, 1).
    pub jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchConfig {
    pub link_mbps: f64,
    /// Fraction of link capacity served to the high queue; the rest serves
    /// the low queue. The shares sum to the link capacity.
    pub high_share: f64,
    /// Buffer capacity per queue, bytes.
    pub queue_capacity_bytes: f64,
    pub rule_capacity: usize,
    pub install_latency: InstallLatencyModel,
    /// Token-bucket burst allowance for metered rules, bytes.
    pub meter_burst_bytes: f64,
    pub seed: u64,
}

impl Default for SwitchConfig {
    fn default() -> SwitchConfig {
        SwitchConfig {
            link_mbps: 10.0,
            high_share: 0.3,
            queue_capacity_bytes: 65_536.0,
            rule_capacity: 4096,
            install_latency: InstallLatencyModel {
                mean_ms: 24.8,
                jitter: 0.3,
            },
            meter_burst_bytes: 16_000.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchOutcome {
    Delivered { queue: QueueClass, drain_ts: f64 },
    Redirected,
    Dropped { reason: DropReason },
}

#[derive(Debug, Clone)]
struct TokenBucket {
    rate_bytes_per_s: f64,
    burst_bytes: f64,
    tokens: f64,
    last_ts: f64,
}

impl TokenBucket {
    fn new(rate_bps: f64, burst_bytes: f64) -> TokenBucket {
        TokenBucket {
            rate_bytes_per_s: rate_bps / 8.0,
            burst_bytes,
            tokens: burst_bytes,
            last_ts: 0.0,
        }
    }

    fn try_consume(&mut self, ts: f64, bytes: f64) -> bool {
        let dt = (ts - self.last_ts).max(0.0);
        self.tokens = (self.tokens + dt * self.rate_bytes_per_s).min(self.burst_bytes);
        self.last_ts = ts;
        if self.tokens >= bytes {
            self.tokens -= bytes;
            true
        } else {
            false
        }
    }
}

/// Fluid-model service queue: a packet admitted at `ts` finishes draining at
/// `busy_until`; admission fails when the byte backlog would exceed the
/// buffer.
#[derive(Debug, Clone)]
struct FluidQueue {
    rate_bytes_per_s: f64,
    capacity_bytes: f64,
    busy_until: f64,
}

impl FluidQueue {
    fn offer(&mut self, ts: f64, bytes: f64) -> Option<f64> {
        let backlog = (self.busy_until - ts).max(0.0) * self.rate_bytes_per_s;
        if backlog + bytes > self.capacity_bytes {
            return None;
        }
        let start = self.busy_until.max(ts);
        self.busy_until = start + bytes / self.rate_bytes_per_s;
        Some(self.busy_until)
    }
}

#[derive(Debug, Clone)]
struct InstalledRule {
    rule: FlowRule,
    seq: u64,
    active_from: f64,
    meter: Option<TokenBucket>,
}

/// The switch. Rules match on the canonical bidirectional flow key; the
/// highest priority wins, install order breaking ties. A default
/// forward-to-low-queue rule at priority 0 backs everything.
#[derive(Debug)]
pub struct SwitchModel {
    config: SwitchConfig,
    rules: Vec<InstalledRule>,
    high: FluidQueue,
    low: FluidQueue,
    rng: ChaCha8Rng,
    next_seq: u64,
}

impl SwitchModel {
    pub fn new(config: SwitchConfig) -> SwitchModel {
        let link_bytes_per_s = config.link_mbps * 1_000_000.0 / 8.0;
        let high_rate = link_bytes_per_s * config.high_share;
        let low_rate = link_bytes_per_s - high_rate;
        SwitchModel {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            high: FluidQueue {
                rate_bytes_per_s: high_rate,
                capacity_bytes: config.queue_capacity_bytes,
                busy_until: 0.0,
            },
            low: FluidQueue {
                rate_bytes_per_s: low_rate,
                capacity_bytes: config.queue_capacity_bytes,
                busy_until: 0.0,
            },
            config,
            rules: Vec::new(),
            next_seq: 0,
        }
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Install a rule; it becomes active after the sampled install latency.
    /// Returns (applied_ts, latency_ms).
    pub fn install_rule(&mut self, rule: FlowRule, now: f64) -> Result<(f64, f64), NetsimError> {
        if self.rules.len() >= self.config.rule_capacity {
            return Err(NetsimError::TableFull {
                capacity: self.config.rule_capacity,
            });
        }
        let model = self.config.install_latency;
        let jitter = if model.jitter > 0.0 {
            self.rng.gen_range(-model.jitter..=model.jitter)
        } else {
            0.0
        };
        let latency_ms = (model.mean_ms * (1.0 + jitter)).max(0.0);
        let active_from = now + latency_ms / 1000.0;
        let meter = rule
            .meter_bps
            .map(|bps| TokenBucket::new(bps, self.config.meter_burst_bytes));
        self.rules.push(InstalledRule {
            rule,
            seq: self.next_seq,
            active_from,
            meter,
        });
        self.next_seq += 1;
        Ok((active_from, latency_ms))
    }

    /// Current queueing delay estimate: time for the backlog to drain.
    pub fn queue_delay_ms(&self, queue: QueueClass, now: f64) -> f64 {
        let q = match queue {
            QueueClass::High => &self.high,
            QueueClass::Low => &self.low,
        };
        (q.busy_until - now).max(0.0) * 1000.0
    }

    /// True when an already-installed rule (active or pending) matches the
    /// same flow with the same action and priority.
    pub fn has_equivalent_rule(&self, rule: &FlowRule) -> bool {
        self.rules.iter().any(|r| {
            r.rule.match_key == rule.match_key
                && r.rule.action == rule.action
                && r.rule.priority == rule.priority
        })
    }

    /// Match a packet against the active rules and forward it.
    pub fn match_and_forward(&mut self, p: &PacketRecord, now: f64) -> MatchOutcome {
        let key = FlowKey::of_packet(p);
        let best = self
            .rules
            .iter_mut()
            .filter(|r| r.active_from <= now && r.rule.match_key == key)
            .max_by(|a, b| {
                a.rule
                    .priority
                    .cmp(&b.rule.priority)
                    .then_with(|| b.seq.cmp(&a.seq)) // earlier install wins ties
            });

        let bytes = p.length as f64;
        match best {
            Some(installed) => match installed.rule.action {
                RuleAction::Drop => MatchOutcome::Dropped {
                    reason: DropReason::Rule,
                },
                RuleAction::OutputHoneypot => MatchOutcome::Redirected,
                RuleAction::Forward => {
                    if let Some(meter) = installed.meter.as_mut() {
                        if !meter.try_consume(now, bytes) {
                            return MatchOutcome::Dropped {
                                reason: DropReason::Meter,
                            };
                        }
                    }
                    let queue = installed.rule.queue.unwrap_or(QueueClass::Low);
                    self.enqueue(queue, now, bytes)
                }
            },
            // Default rule: forward on the low queue.
            None => self.enqueue(QueueClass::Low, now, bytes),
        }
    }

    fn enqueue(&mut self, queue: QueueClass, now: f64, bytes: f64) -> MatchOutcome {
        let q = match queue {
            QueueClass::High => &mut self.high,
            QueueClass::Low => &mut self.low,
        };
        match q.offer(now, bytes) {
            Some(drain_ts) => MatchOutcome::Delivered { queue, drain_ts },
            None => MatchOutcome::Dropped {
                reason: DropReason::QueueOverflow,
            },
        }
    }
}
