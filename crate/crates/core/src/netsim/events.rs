//! The simulation event log and its line-delimited export.

use crate::label::ClassLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Rule,
    Meter,
    QueueOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    PacketDelivered {
        ts: f64,
        flow: String,
        bytes: u64,
        queue: String,
    },
    PacketRedirected {
        ts: f64,
        flow: String,
        bytes: u64,
    },
    PacketDropped {
        ts: f64,
        flow: String,
        bytes: u64,
        reason: DropReason,
    },
    AlertRaised {
        ts: f64,
        flow: String,
        label: ClassLabel,
        confidence: f64,
    },
    RuleInstalled {
        ts: f64,
        flow: String,
        action: String,
        priority: u32,
        requested_ts: f64,
        latency_ms: f64,
    },
    TxnSubmitted {
        ts: f64,
        id: String,
        flow: String,
    },
    TxnCommitted {
        ts: f64,
        id: String,
        flow: String,
        block: u64,
    },
}

impl Event {
    pub fn ts(&self) -> f64 {
        match self {
            Event::PacketDelivered { ts, .. }
            | Event::PacketRedirected { ts, .. }
            | Event::PacketDropped { ts, .. }
            | Event::AlertRaised { ts, .. }
            | Event::RuleInstalled { ts, .. }
            | Event::TxnSubmitted { ts, .. }
            | Event::TxnCommitted { ts, .. } => *ts,
        }
    }

    pub fn flow(&self) -> Option<&str> {
        match self {
            Event::PacketDelivered { flow, .. }
            | Event::PacketRedirected { flow, .. }
            | Event::PacketDropped { flow, .. }
            | Event::AlertRaised { flow, .. }
            | Event::RuleInstalled { flow, .. }
            | Event::TxnSubmitted { flow, .. }
            | Event::TxnCommitted { flow, .. } => Some(flow),
        }
    }
}

/// Run-level metadata carried with the log: the producing config hash, the
/// app/truth assignment per flow, and the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LogMeta {
    pub scenario: String,
    pub seed: u64,
    pub enforce: bool,
    pub config_hash: String,
    pub duration_s: f64,
    /// Measurement window (start, end) used by QoS metrics.
    pub window: (f64, f64),
    /// Flow id -> application name for benign flows.
    pub flow_apps: BTreeMap<String, String>,
    /// Flow id -> ground-truth label name.
    pub flow_truth: BTreeMap<String, String>,
}

/// Timestamped simulation events plus run metadata. Events are kept sorted
/// by timestamp (stable on ties).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub meta: LogMeta,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn new(meta: LogMeta) -> EventLog {
        EventLog {
            meta,
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    /// Stable-sort events by timestamp. Generation order breaks ties, which
    /// preserves cause-before-effect for same-instant events.
    pub fn finalize(&mut self) {
        self.events
            .sort_by(|a, b| a.ts().partial_cmp(&b.ts()).expect("finite timestamps"));
    }

    /// Export: first line is the metadata object, then one event per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<(), std::io::Error> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let meta = serde_json::json!({ "meta": self.meta });
        writeln!(out, "{meta}")?;
        for event in &self.events {
            writeln!(out, "{}", serde_json::to_string(event)?)?;
        }
        out.flush()
    }

    pub fn load_jsonl(path: &Path) -> Result<EventLog, std::io::Error> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let meta_line = lines
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "empty log"))??;
        #[derive(Deserialize)]
        struct MetaLine {
            meta: LogMeta,
        }
        let meta: MetaLine = serde_json::from_str(&meta_line)?;
        let mut log = EventLog::new(meta.meta);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            log.events.push(serde_json::from_str(&line)?);
        }
        Ok(log)
    }
}
