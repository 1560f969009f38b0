//! Tamper-evident alert ledger.
//!
//! Gated alerts are sealed into signed transactions (canonical byte payload,
//! SHA-256 digest, Ed25519 signature), endorsed by simulated peers, batched
//! into hash-chained blocks, and persisted append-only. Verification
//! recomputes every digest, signature, block hash, and linkage and reports
//! the earliest inconsistency. The design mirrors a single-process
//! permissioned-ledger deployment: an M-of-N endorsement policy, an ordering
//! step that batches transactions chronologically, and a query surface keyed
//! by flow id.

mod chain;
mod latency;
mod node;
mod seal;

pub use chain::{Block, Chain, PendingTxn, QueryRecord, VerifyOutcome, GENESIS_COMMIT_TS};
pub use latency::{measure_txn_latency, LatencyConfig, LatencyRow};
pub use node::{EndorsementPolicy, LedgerNode, LedgerNodeConfig, Peer, PeerReason, SubmitOutcome};
pub use seal::{
    parse_payload, seal_transaction, ActionRecord, AlertTransaction, Directory, ParsedPayload,
    SigningIdentity,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("SerializationFailure: {0}")]
    SerializationFailure(String),
    #[error("MalformedLedger: {0}")]
    Malformed(String),
    #[error("InvalidPolicy: need 1 <= required <= peers, got {required} of {peers}")]
    InvalidPolicy { required: usize, peers: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
