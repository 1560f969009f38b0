//! Flow-based intrusion detection, tamper-evident alert logging, and
//! QoS enforcement for software-defined networks, with a deterministic
//! desk-scale simulator and a metrics harness.
//!
//! Pipeline: packets assemble into bidirectional flows ([`flow`]), completed
//! flows are featurized and z-score normalized, a weighted ensemble of tree
//! models classifies them ([`ids`]), gated alerts are sealed into a
//! hash-chained, peer-endorsed ledger ([`ledger`]), and the enforcement
//! policy compiles severity-ranked switch rules ([`policy`]) that a
//! simulated switch applies in a closed loop ([`netsim`]). [`metrics`]
//! computes accuracy, false-positive rate, latencies, QoS retention,
//! throughput, and drift resilience from run outputs.

pub mod config;
pub mod dataset;
pub mod flow;
pub mod ids;
pub mod label;
pub mod ledger;
pub mod metrics;
pub mod netsim;
pub mod pipeline;
pub mod policy;

pub use config::RunConfig;
pub use label::ClassLabel;
