//! Flow assembly and featurization.
//!
//! Packets are grouped into bidirectional flows keyed by their canonical
//! 5-tuple. A flow table accumulates streaming aggregates (no packet
//! retention), expires flows that have been idle for the configured timeout,
//! and hands the completed flows to [`extract_features`], which computes the
//! statistical feature set: duration, packet count, mean packet size, byte
//! rate, mean inter-arrival time, destination-port entropy, size extrema,
//! direction ratio, and TCP flag counts. Feature vectors are z-score
//! normalized against fitted per-feature statistics.

use crate::label::ClassLabel;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::net::Ipv4Addr;
use thiserror::Error;

/// Fixed feature schema, in vector order. Everything downstream (normalizer,
/// model files, dataset mappings) refers to features by these names.
pub const FEATURE_NAMES: [&str; 12] = [
    "duration",
    "pkt_count",
    "mean_pkt_size",
    "byte_rate",
    "mean_iat",
    "dst_port_entropy",
    "size_min",
    "size_max",
    "fwd_ratio",
    "syn_count",
    "fin_count",
    "rst_count",
];

/// Floor applied to flow duration when computing byte rate, in seconds.
/// Keeps single-packet and zero-duration flows finite.
pub const MIN_RATE_DURATION_S: f64 = 0.001;

/// Default idle timeout for flow expiry, in seconds.
pub const DEFAULT_FLOW_TIMEOUT_S: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("NonMonotonicTimestamp: packet at {packet_ts}s precedes flow tail {flow_last_ts}s")]
    NonMonotonicTimestamp { packet_ts: f64, flow_last_ts: f64 },
    #[error("InsufficientData: normalizer needs at least 2 rows, got {0}")]
    InsufficientData(usize),
    #[error("SchemaMismatch: {0}")]
    SchemaMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Other,
}

impl Protocol {
    pub fn parse(s: &str) -> Protocol {
        match s.trim().to_ascii_uppercase().as_str() {
            "TCP" | "6" => Protocol::Tcp,
            "UDP" | "17" => Protocol::Udp,
            "ICMP" | "1" => Protocol::Icmp,
            _ => Protocol::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Icmp => "ICMP",
            Protocol::Other => "OTHER",
        }
    }
}

/// TCP flag bits (subset relevant to the feature set).
pub const TCP_FIN: u8 = 0x01;
pub const TCP_SYN: u8 = 0x02;
pub const TCP_RST: u8 = 0x04;

/// One observed packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    /// Arrival time in seconds (monotone non-decreasing within a trace).
    pub ts: f64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    /// Packet length in bytes, >= 1.
    pub length: u64,
    pub tcp_flags: Option<u8>,
}

/// Canonical bidirectional 5-tuple. Both directions of a conversation map to
/// the same key: the endpoint pair is stored order-normalized, with the
/// lexicographically smaller (ip, port) endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey {
    pub ep_a: (Ipv4Addr, u16),
    pub ep_b: (Ipv4Addr, u16),
    pub protocol: Protocol,
}

impl FlowKey {
    pub fn new(
        src_ip: Ipv4Addr,
        src_port: u16,
        dst_ip: Ipv4Addr,
        dst_port: u16,
        protocol: Protocol,
    ) -> FlowKey {
        let src = (src_ip, src_port);
        let dst = (dst_ip, dst_port);
        if src <= dst {
            FlowKey {
                ep_a: src,
                ep_b: dst,
                protocol,
            }
        } else {
            FlowKey {
                ep_a: dst,
                ep_b: src,
                protocol,
            }
        }
    }

    pub fn of_packet(p: &PacketRecord) -> FlowKey {
        FlowKey::new(p.src_ip, p.src_port, p.dst_ip, p.dst_port, p.protocol)
    }

    /// Stable textual rendering, used as the flow id on alerts, ledger
    /// transactions, and switch rules.
    pub fn render(&self) -> String {
        format!(
            "{}:{}-{}:{}/{}",
            self.ep_a.0,
            self.ep_a.1,
            self.ep_b.0,
            self.ep_b.1,
            self.protocol.name()
        )
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Streaming per-flow aggregates. Holds running sums only; the packets
/// themselves are not retained.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub key: FlowKey,
    /// Source endpoint of the flow's first packet; defines the forward
    /// direction.
    pub initiator: (Ipv4Addr, u16),
    pub first_ts: f64,
    pub last_ts: f64,
    pub pkt_count: u64,
    pub byte_sum: u64,
    pub iat_sum: f64,
    pub iat_sq_sum: f64,
    pub size_min: u64,
    pub size_max: u64,
    pub dst_port_counts: BTreeMap<u16, u64>,
    pub fwd_pkt_count: u64,
    pub bwd_pkt_count: u64,
    pub syn_count: u64,
    pub fin_count: u64,
    pub rst_count: u64,
    /// Ground-truth class for supervised traces, when known.
    pub label: Option<ClassLabel>,
}

impl FlowState {
    fn open(p: &PacketRecord) -> FlowState {
        let mut f = FlowState {
            key: FlowKey::of_packet(p),
            initiator: (p.src_ip, p.src_port),
            first_ts: p.ts,
            last_ts: p.ts,
            pkt_count: 0,
            byte_sum: 0,
            iat_sum: 0.0,
            iat_sq_sum: 0.0,
            size_min: u64::MAX,
            size_max: 0,
            dst_port_counts: BTreeMap::new(),
            fwd_pkt_count: 0,
            bwd_pkt_count: 0,
            syn_count: 0,
            fin_count: 0,
            rst_count: 0,
            label: None,
        };
        f.absorb(p);
        f
    }

    fn absorb(&mut self, p: &PacketRecord) {
        if self.pkt_count > 0 {
            let iat = p.ts - self.last_ts;
            self.iat_sum += iat;
            self.iat_sq_sum += iat * iat;
        }
        self.pkt_count += 1;
        self.byte_sum += p.length;
        self.size_min = self.size_min.min(p.length);
        self.size_max = self.size_max.max(p.length);
        *self.dst_port_counts.entry(p.dst_port).or_insert(0) += 1;
        if (p.src_ip, p.src_port) == self.initiator {
            self.fwd_pkt_count += 1;
        } else {
            self.bwd_pkt_count += 1;
        }
        if let Some(flags) = p.tcp_flags {
            if flags & TCP_SYN != 0 {
                self.syn_count += 1;
            }
            if flags & TCP_FIN != 0 {
                self.fin_count += 1;
            }
            if flags & TCP_RST != 0 {
                self.rst_count += 1;
            }
        }
        self.last_ts = p.ts;
    }
}

/// The flow table. Single-writer: one ingestion stream appends packets;
/// expiry hands back owned snapshots that are safe to process elsewhere.
#[derive(Debug, Default)]
pub struct FlowTable {
    flows: HashMap<FlowKey, FlowState>,
}

impl FlowTable {
    pub fn new() -> FlowTable {
        FlowTable {
            flows: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Append `p` to its flow, then expire every flow idle for at least
    /// `timeout` seconds as of `now`. Expired flows are removed and returned
    /// sorted by their last packet time (key order breaks ties).
    pub fn ingest_and_expire(
        &mut self,
        p: &PacketRecord,
        now: f64,
        timeout: f64,
    ) -> Result<Vec<FlowState>, FlowError> {
        self.ingest(p)?;
        Ok(self.expire_idle(now, timeout))
    }

    /// Append `p` to its flow, creating the flow if needed.
    pub fn ingest(&mut self, p: &PacketRecord) -> Result<(), FlowError> {
        let key = FlowKey::of_packet(p);
        match self.flows.get_mut(&key) {
            Some(flow) => {
                if p.ts < flow.last_ts {
                    return Err(FlowError::NonMonotonicTimestamp {
                        packet_ts: p.ts,
                        flow_last_ts: flow.last_ts,
                    });
                }
                flow.absorb(p);
            }
            None => {
                self.flows.insert(key, FlowState::open(p));
            }
        }
        Ok(())
    }

    /// Remove and return every flow with `now - last_ts >= timeout`, sorted
    /// by last packet time.
    pub fn expire_idle(&mut self, now: f64, timeout: f64) -> Vec<FlowState> {
        let expired_keys: Vec<FlowKey> = self
            .flows
            .iter()
            .filter(|(_, f)| now - f.last_ts >= timeout)
            .map(|(k, _)| *k)
            .collect();
        let mut out: Vec<FlowState> = expired_keys
            .into_iter()
            .map(|k| self.flows.remove(&k).expect("key collected from table"))
            .collect();
        sort_by_last_ts(&mut out);
        out
    }

    /// Remove and return every flow whose age (`now - first_ts`) is at least
    /// `max_age`. Used by the simulator to force long-lived flows through
    /// the detection path while they are still active.
    pub fn expire_aged(&mut self, now: f64, max_age: f64) -> Vec<FlowState> {
        let keys: Vec<FlowKey> = self
            .flows
            .iter()
            .filter(|(_, f)| now - f.first_ts >= max_age)
            .map(|(k, _)| *k)
            .collect();
        let mut out: Vec<FlowState> = keys
            .into_iter()
            .map(|k| self.flows.remove(&k).expect("key collected from table"))
            .collect();
        sort_by_last_ts(&mut out);
        out
    }

    /// Drain every remaining flow, sorted by last packet time.
    pub fn flush(&mut self) -> Vec<FlowState> {
        let mut out: Vec<FlowState> = self.flows.drain().map(|(_, f)| f).collect();
        sort_by_last_ts(&mut out);
        out
    }
}

fn sort_by_last_ts(flows: &mut [FlowState]) {
    flows.sort_by(|a, b| {
        a.last_ts
            .partial_cmp(&b.last_ts)
            .expect("timestamps are finite")
            .then_with(|| a.key.cmp(&b.key))
    });
}

/// The computed feature set for one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub duration: f64,
    pub pkt_count: f64,
    pub mean_pkt_size: f64,
    pub byte_rate: f64,
    pub mean_iat: f64,
    pub dst_port_entropy: f64,
    pub size_min: f64,
    pub size_max: f64,
    pub fwd_ratio: f64,
    pub syn_count: f64,
    pub fin_count: f64,
    pub rst_count: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.duration,
            self.pkt_count,
            self.mean_pkt_size,
            self.byte_rate,
            self.mean_iat,
            self.dst_port_entropy,
            self.size_min,
            self.size_max,
            self.fwd_ratio,
            self.syn_count,
            self.fin_count,
            self.rst_count,
        ]
    }
}

/// Shannon entropy, base 2, of a frequency table.
pub fn port_entropy(counts: &BTreeMap<u16, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Compute the feature set from a completed flow's aggregates.
///
/// Degenerate cases are defined, never NaN: byte rate divides by
/// `max(duration, 1 ms)`, single-packet flows get a zero mean inter-arrival
/// time, and a single destination port has zero entropy.
pub fn extract_features(f: &FlowState) -> FeatureVector {
    debug_assert!(f.pkt_count >= 1);
    let n = f.pkt_count as f64;
    let duration = f.last_ts - f.first_ts;
    let mean_iat = if f.pkt_count >= 2 {
        f.iat_sum / (n - 1.0)
    } else {
        0.0
    };
    FeatureVector {
        duration,
        pkt_count: n,
        mean_pkt_size: f.byte_sum as f64 / n,
        byte_rate: f.byte_sum as f64 / duration.max(MIN_RATE_DURATION_S),
        mean_iat,
        dst_port_entropy: port_entropy(&f.dst_port_counts),
        size_min: f.size_min as f64,
        size_max: f.size_max as f64,
        fwd_ratio: f.fwd_pkt_count as f64 / n,
        syn_count: f.syn_count as f64,
        fin_count: f.fin_count as f64,
        rst_count: f.rst_count as f64,
    }
}

/// Per-feature z-score statistics with the feature ordering they were fit
/// against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    /// Identity statistics (mean 0, std 1) over a schema; normalization is a
    /// no-op. Used by stub detectors.
    pub fn identity(feature_names: &[String]) -> NormalizationStats {
        NormalizationStats {
            feature_names: feature_names.to_vec(),
            mean: vec![0.0; feature_names.len()],
            std: vec![1.0; feature_names.len()],
        }
    }

    /// Fit population mean and standard deviation per column, two-pass.
    pub fn fit(
        feature_names: &[String],
        rows: &[Vec<f64>],
    ) -> Result<NormalizationStats, FlowError> {
        if rows.len() < 2 {
            return Err(FlowError::InsufficientData(rows.len()));
        }
        let d = feature_names.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(FlowError::SchemaMismatch(format!(
                    "row {i} has {} values, schema has {d}",
                    r.len()
                )));
            }
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(r) {
                let delta = x - m;
                *v += delta * delta;
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(NormalizationStats {
            feature_names: feature_names.to_vec(),
            mean,
            std,
        })
    }

    /// Fit over flow feature vectors using the fixed schema.
    pub fn fit_features(rows: &[FeatureVector]) -> Result<NormalizationStats, FlowError> {
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let arrays: Vec<Vec<f64>> = rows.iter().map(|r| r.to_array().to_vec()).collect();
        NormalizationStats::fit(&names, &arrays)
    }

    /// Map each value to (x - mean) / std. Constant features (std = 0)
    /// normalize to 0.
    pub fn normalize(&self, values: &[f64]) -> Result<Vec<f64>, FlowError> {
        if values.len() != self.mean.len() {
            return Err(FlowError::SchemaMismatch(format!(
                "vector has {} values, stats cover {}",
                values.len(),
                self.mean.len()
            )));
        }
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
            .collect())
    }

    /// Normalize a flow feature vector, checking the schema matches the one
    /// the stats were fit on.
    pub fn normalize_features(&self, v: &FeatureVector) -> Result<Vec<f64>, FlowError> {
        if self.feature_names != FEATURE_NAMES {
            return Err(FlowError::SchemaMismatch(
                "stats were not fit on the flow feature schema".into(),
            ));
        }
        self.normalize(&v.to_array())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ip(last: u8) -> Ipv4Addr {
        Ipv4Addr::new(10, 0, 0, last)
    }

    fn pkt(ts: f64, s: u8, sp: u16, d: u8, dp: u16, len: u64) -> PacketRecord {
        PacketRecord {
            ts,
            src_ip: ip(s),
            dst_ip: ip(d),
            src_port: sp,
            dst_port: dp,
            protocol: Protocol::Tcp,
            length: len,
            tcp_flags: None,
        }
    }

    #[test]
    fn flow_key_is_symmetric_and_deterministic() {
        let a = pkt(0.0, 1, 5000, 2, 80, 100);
        let b = pkt(0.1, 2, 80, 1, 5000, 100);
        assert_eq!(FlowKey::of_packet(&a), FlowKey::of_packet(&b));
        assert_eq!(FlowKey::of_packet(&a), FlowKey::of_packet(&a));
    }

    #[test]
    fn flow_key_separates_disjoint_tuples() {
        let a = pkt(0.0, 1, 5000, 2, 80, 100);
        let b = pkt(0.0, 1, 5000, 2, 443, 100);
        assert_ne!(FlowKey::of_packet(&a), FlowKey::of_packet(&b));
    }

    #[test]
    fn expiry_at_exact_timeout_boundary() {
        let mut table = FlowTable::new();
        let done = table
            .ingest_and_expire(&pkt(0.0, 1, 1000, 2, 80, 64), 5.0, 5.0)
            .unwrap();
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].pkt_count, 1);
        assert!(table.is_empty());
    }

    #[test]
    fn active_flow_survives_expiry_scan() {
        let mut table = FlowTable::new();
        table
            .ingest_and_expire(&pkt(0.0, 1, 1000, 2, 80, 64), 0.0, 5.0)
            .unwrap();
        let done = table
            .ingest_and_expire(&pkt(1.0, 2, 80, 1, 1000, 64), 3.0, 5.0)
            .unwrap();
        assert!(done.is_empty());
        assert_eq!(table.len(), 1);
        let all = table.flush();
        assert_eq!(all[0].pkt_count, 2);
    }

    #[test]
    fn expiry_matches_brute_force_scan() {
        // 3 flows idle 6 s, 2 flows idle 1 s, timeout 5 s.
        let mut table = FlowTable::new();
        let mut last_seen = Vec::new();
        for i in 0..3u16 {
            let p = pkt(1.0 + i as f64 * 0.1, 1, 2000 + i, 2, 80, 100);
            table.ingest(&p).unwrap();
            last_seen.push((FlowKey::of_packet(&p), p.ts));
        }
        for i in 0..2u16 {
            let p = pkt(6.0 + i as f64 * 0.1, 3, 3000 + i, 2, 80, 100);
            table.ingest(&p).unwrap();
            last_seen.push((FlowKey::of_packet(&p), p.ts));
        }
        let now = 7.2;
        let timeout = 5.0;
        // Independent oracle: scan every entry against the predicate.
        let mut expected: Vec<FlowKey> = last_seen
            .iter()
            .filter(|(_, ts)| now - ts >= timeout)
            .map(|(k, _)| *k)
            .collect();
        expected.sort();
        assert_eq!(expected.len(), 3);

        let expired = table.expire_idle(now, timeout);
        let mut got: Vec<FlowKey> = expired.iter().map(|f| f.key).collect();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn expired_flows_sorted_by_last_ts() {
        let mut table = FlowTable::new();
        table.ingest(&pkt(2.0, 1, 1001, 2, 80, 10)).unwrap();
        table.ingest(&pkt(0.5, 1, 1002, 2, 80, 10)).unwrap();
        table.ingest(&pkt(1.2, 1, 1003, 2, 80, 10)).unwrap();
        let expired = table.expire_idle(100.0, 5.0);
        let ts: Vec<f64> = expired.iter().map(|f| f.last_ts).collect();
        assert_eq!(ts, vec![0.5, 1.2, 2.0]);
    }

    #[test]
    fn non_monotonic_timestamp_is_rejected() {
        let mut table = FlowTable::new();
        table.ingest(&pkt(5.0, 1, 1000, 2, 80, 64)).unwrap();
        let err = table.ingest(&pkt(4.0, 1, 1000, 2, 80, 64)).unwrap_err();
        assert!(matches!(err, FlowError::NonMonotonicTimestamp { .. }));
    }

    #[test]
    fn feature_arithmetic_examples() {
        let mut table = FlowTable::new();
        for (ts, len) in [(0.0, 100), (1.0, 200), (3.0, 300)] {
            table.ingest(&pkt(ts, 1, 1000, 2, 80, len)).unwrap();
        }
        let f = &table.flush()[0];
        let v = extract_features(f);
        assert_abs_diff_eq!(v.mean_pkt_size, 200.0);
        assert_abs_diff_eq!(v.byte_rate, 600.0 / 3.0);
        assert_abs_diff_eq!(v.mean_iat, 1.5);
        assert_abs_diff_eq!(v.duration, 3.0);
    }

    #[test]
    fn byte_rate_example() {
        let mut table = FlowTable::new();
        table.ingest(&pkt(0.0, 1, 1000, 2, 80, 300)).unwrap();
        table.ingest(&pkt(2.0, 1, 1000, 2, 80, 300)).unwrap();
        let v = extract_features(&table.flush()[0]);
        assert_abs_diff_eq!(v.byte_rate, 300.0);
    }

    #[test]
    fn single_packet_flow_is_finite() {
        let mut table = FlowTable::new();
        table.ingest(&pkt(1.0, 1, 1000, 2, 80, 64)).unwrap();
        let v = extract_features(&table.flush()[0]);
        assert_eq!(v.duration, 0.0);
        assert_eq!(v.mean_iat, 0.0);
        // 1 ms duration floor.
        assert_abs_diff_eq!(v.byte_rate, 64000.0);
        assert!(v.to_array().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn entropy_analytic_cases() {
        let uniform: BTreeMap<u16, u64> = [(80, 5), (443, 5), (53, 5), (22, 5)].into();
        assert_abs_diff_eq!(port_entropy(&uniform), 2.0);
        let single: BTreeMap<u16, u64> = [(80, 9)].into();
        assert_abs_diff_eq!(port_entropy(&single), 0.0);
        let skewed: BTreeMap<u16, u64> = [(80, 2), (443, 1), (53, 1)].into();
        assert_abs_diff_eq!(port_entropy(&skewed), 1.5);
    }

    #[test]
    fn normalizer_basic_stats() {
        let names = vec!["a".to_string()];
        let s = NormalizationStats::fit(&names, &[vec![2.0], vec![4.0]]).unwrap();
        assert_abs_diff_eq!(s.mean[0], 3.0);
        assert_abs_diff_eq!(s.std[0], 1.0);

        let c = NormalizationStats::fit(&names, &[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        assert_abs_diff_eq!(c.mean[0], 5.0);
        assert_abs_diff_eq!(c.std[0], 0.0);
    }

    #[test]
    fn normalize_conventions() {
        let s = NormalizationStats {
            feature_names: vec!["a".into(), "b".into()],
            mean: vec![5.0, 5.0],
            std: vec![2.0, 0.0],
        };
        let out = s.normalize(&[7.0, 9.0]).unwrap();
        assert_abs_diff_eq!(out[0], 1.0);
        assert_eq!(out[1], 0.0, "constant feature maps to 0");
        let at_mean = s.normalize(&[5.0, 5.0]).unwrap();
        assert_eq!(at_mean[0], 0.0);
    }

    #[test]
    fn normalize_rejects_schema_mismatch() {
        let s = NormalizationStats {
            feature_names: vec!["a".into()],
            mean: vec![0.0],
            std: vec![1.0],
        };
        assert!(matches!(
            s.normalize(&[1.0, 2.0]),
            Err(FlowError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn normalizer_needs_two_rows() {
        let names = vec!["a".to_string()];
        assert!(matches!(
            NormalizationStats::fit(&names, &[vec![1.0]]),
            Err(FlowError::InsufficientData(1))
        ));
    }
}
