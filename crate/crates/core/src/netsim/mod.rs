//! Deterministic discrete-event network simulation.
//!
//! A single switch with priority-matched rules, two service queues, and
//! token-bucket meters carries synthetic traffic under a virtual clock. The
//! closed loop wires the whole pipeline together: ingest -> expire ->
//! featurize -> normalize -> classify -> gate -> (seal, endorse, commit) ->
//! severity -> rule compile -> rule install.

mod clock;
mod closedloop;
mod events;
mod switch;
mod traffic;

pub use clock::VirtualClock;
pub use closedloop::{
    run_closed_loop, FlowDetector, NeverAlertDetector, SimOutput, TruthOracleDetector,
};
pub use events::{DropReason, Event, EventLog, LogMeta};
pub use switch::{InstallLatencyModel, MatchOutcome, SwitchConfig, SwitchModel};
pub use traffic::{
    generate_traffic, AppTraffic, AttackSpec, GeneratedTraffic, LedgerParams, ScenarioConfig,
    TrafficClass,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("TableFull: switch holds {capacity} rules")]
    TableFull { capacity: usize },
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
    #[error("flow engine: {0}")]
    Flow(#[from] crate::flow::FlowError),
    #[error("detector: {0}")]
    Ids(#[from] crate::ids::IdsError),
    #[error("ledger: {0}")]
    Ledger(#[from] crate::ledger::LedgerError),
    #[error("policy: {0}")]
    Policy(#[from] crate::policy::PolicyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// A component error annotated with where in the simulation it happened.
    #[error("at t={at:.6}s flow {flow}: {source}")]
    AtEvent {
        at: f64,
        flow: String,
        source: Box<NetsimError>,
    },
}

impl NetsimError {
    pub fn at_event(self, at: f64, flow: &crate::flow::FlowKey) -> NetsimError {
        NetsimError::AtEvent {
            at,
            flow: flow.render(),
            source: Box::new(self),
        }
    }
}
