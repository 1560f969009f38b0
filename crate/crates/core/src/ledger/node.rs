//! Threshold gate, peer endorsement, and the pending queue.

use super::chain::{Block, Chain, PendingTxn};
use super::seal::{
    parse_payload, seal_transaction, ActionRecord, AlertTransaction, Directory, SigningIdentity,
};
use super::LedgerError;
use crate::ids::Alert;
use std::collections::VecDeque;

/// M-of-N endorsement requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndorsementPolicy {
    pub peers: usize,
    pub required: usize,
}

impl EndorsementPolicy {
    pub fn new(peers: usize, required: usize) -> Result<EndorsementPolicy, LedgerError> {
        if required == 0 || required > peers {
            return Err(LedgerError::InvalidPolicy { required, peers });
        }
        Ok(EndorsementPolicy { peers, required })
    }
}

/// Why a peer refused to endorse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeerReason {
    BadDigest,
    BadSignature(String),
    MalformedPayload(String),
}

/// A simulated endorsing peer: re-verifies digest, signature, and payload
/// format against its own directory of known submitters.
#[derive(Debug, Clone)]
pub struct Peer {
    pub id: String,
    pub directory: Directory,
}

impl Peer {
    pub fn endorse(&self, txn: &AlertTransaction) -> Result<(), PeerReason> {
        if txn.expected_digest() != txn.digest {
            return Err(PeerReason::BadDigest);
        }
        self.directory
            .verify(txn)
            .map_err(PeerReason::BadSignature)?;
        parse_payload(&txn.payload).map_err(|e| PeerReason::MalformedPayload(e.to_string()))?;
        Ok(())
    }
}

/// Outcome of a submission attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum SubmitOutcome {
    Accepted(AlertTransaction),
    BelowThreshold,
    Rejected(Vec<(String, PeerReason)>),
}

#[derive(Debug, Clone)]
pub struct LedgerNodeConfig {
    /// Logging threshold: submissions below it are not sealed or queued.
    pub theta: f64,
    pub block_size: usize,
    pub block_timeout_s: f64,
    /// Simulated ordering delay added to each block's commit time.
    pub ordering_delay_s: f64,
}

impl Default for LedgerNodeConfig {
    fn default() -> LedgerNodeConfig {
        LedgerNodeConfig {
            theta: 0.5,
            block_size: 10,
            block_timeout_s: 2.0,
            ordering_delay_s: 0.005,
        }
    }
}

/// The full ledger service: gate, endorsement, ordering, chain.
///
/// Submissions may arrive from any number of producers; the pending queue
/// fixes the total order at enqueue time, and commits are serialized through
/// `tick`/`flush`.
#[derive(Debug)]
pub struct LedgerNode {
    pub config: LedgerNodeConfig,
    pub signer: SigningIdentity,
    pub peers: Vec<Peer>,
    pub policy: EndorsementPolicy,
    pub chain: Chain,
    pending: VecDeque<PendingTxn>,
    next_seq: u64,
}

impl LedgerNode {
    /// Build a node with `policy.peers` simulated peers that all know the
    /// signer's public key.
    pub fn new(
        config: LedgerNodeConfig,
        signer: SigningIdentity,
        policy: EndorsementPolicy,
    ) -> LedgerNode {
        let mut directory = Directory::new();
        directory.register(&signer);
        let peers = (0..policy.peers)
            .map(|i| Peer {
                id: format!("peer-{i}"),
                directory: directory.clone(),
            })
            .collect();
        LedgerNode {
            config,
            signer,
            peers,
            policy,
            chain: Chain::new(),
            pending: VecDeque::new(),
            next_seq: 0,
        }
    }

    pub fn directory(&self) -> Directory {
        let mut directory = Directory::new();
        directory.register(&self.signer);
        directory
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Gate on confidence, seal, endorse, and queue.
    ///
    /// Below-threshold submissions return [`SubmitOutcome::BelowThreshold`]
    /// without touching the queue (the gate is `confidence >= theta`).
    pub fn submit(
        &mut self,
        alert: &Alert,
        action: Option<&ActionRecord>,
        now: f64,
    ) -> Result<SubmitOutcome, LedgerError> {
        if alert.confidence < self.config.theta {
            return Ok(SubmitOutcome::BelowThreshold);
        }
        let txn = seal_transaction(alert, action, &self.signer, now)?;
        Ok(self.submit_sealed(txn, now))
    }

    /// Endorse a pre-sealed transaction and queue it if at least
    /// `policy.required` peers agree.
    pub fn submit_sealed(&mut self, txn: AlertTransaction, now: f64) -> SubmitOutcome {
        let mut failures = Vec::new();
        let mut endorsements = 0usize;
        for peer in &self.peers {
            match peer.endorse(&txn) {
                Ok(()) => endorsements += 1,
                Err(reason) => failures.push((peer.id.clone(), reason)),
            }
        }
        if endorsements < self.policy.required {
            return SubmitOutcome::Rejected(failures);
        }
        self.pending.push_back(PendingTxn {
            seq: self.next_seq,
            txn: txn.clone(),
            submitted_ts: now,
        });
        self.next_seq += 1;
        SubmitOutcome::Accepted(txn)
    }

    /// Cut every block that is due as of `now`. Commit timestamps include
    /// the configured ordering delay.
    pub fn tick(&mut self, now: f64) -> Vec<Block> {
        let mut out = Vec::new();
        while let Some(block) =
            self.cut_one(self.config.block_size, self.config.block_timeout_s, now)
        {
            out.push(block);
        }
        out
    }

    /// Commit everything still pending, regardless of block size.
    pub fn flush(&mut self, now: f64) -> Vec<Block> {
        let mut out = self.tick(now);
        while !self.pending.is_empty() {
            if let Some(block) = self.cut_one(self.pending.len(), 0.0, now) {
                out.push(block);
            }
        }
        out
    }

    fn cut_one(&mut self, block_size: usize, timeout: f64, now: f64) -> Option<Block> {
        let mut block = self
            .chain
            .commit_block(&mut self.pending, block_size, timeout, now)?;
        // commit_block stamps `now`; shift to the post-ordering time.
        let commit_ts = now + self.config.ordering_delay_s;
        block.commit_ts = commit_ts;
        block.block_hash = Block::compute_hash(
            block.index,
            &block.prev_hash,
            &block.transactions,
            commit_ts,
        );
        let stored = self.chain.blocks.last_mut().expect("just appended");
        stored.commit_ts = block.commit_ts;
        stored.block_hash = block.block_hash;
        Some(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ClassLabel;

    fn alert(flow: &str, confidence: f64, ts: f64) -> Alert {
        Alert {
            flow_id: flow.into(),
            label: ClassLabel::DDoS,
            confidence,
            timestamp: ts,
        }
    }

    fn node() -> LedgerNode {
        LedgerNode::new(
            LedgerNodeConfig::default(),
            SigningIdentity::derive("ids-node", 9),
            EndorsementPolicy::new(2, 2).unwrap(),
        )
    }

    #[test]
    fn honest_submission_is_accepted_by_two_of_two() {
        let mut n = node();
        let out = n.submit(&alert("f", 0.9, 1.0), None, 1.0).unwrap();
        assert!(matches!(out, SubmitOutcome::Accepted(_)));
        assert_eq!(n.pending_len(), 1);
    }

    #[test]
    fn below_threshold_leaves_ledger_unchanged() {
        let mut n = node();
        let out = n.submit(&alert("f", 0.4, 1.0), None, 1.0).unwrap();
        assert_eq!(out, SubmitOutcome::BelowThreshold);
        assert_eq!(n.pending_len(), 0);
        assert_eq!(n.chain.committed_txn_count(), 0);
    }

    #[test]
    fn at_threshold_is_accepted() {
        let mut n = node();
        let out = n.submit(&alert("f", 0.5, 1.0), None, 1.0).unwrap();
        assert!(
            matches!(out, SubmitOutcome::Accepted(_)),
            "gate is confidence >= theta"
        );
    }

    #[test]
    fn corrupted_signature_rejected_by_every_peer() {
        let mut n = node();
        let mut txn = seal_transaction(&alert("f", 0.9, 1.0), None, &n.signer, 1.0).unwrap();
        txn.signature[10] ^= 0xFF;
        match n.submit_sealed(txn, 1.0) {
            SubmitOutcome::Rejected(reasons) => {
                assert_eq!(reasons.len(), 2);
                assert!(reasons
                    .iter()
                    .all(|(_, r)| matches!(r, PeerReason::BadSignature(_))));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        assert_eq!(n.pending_len(), 0);
    }

    #[test]
    fn unknown_submitter_is_rejected() {
        let mut n = node();
        let stranger = SigningIdentity::derive("stranger", 4);
        let txn = seal_transaction(&alert("f", 0.9, 1.0), None, &stranger, 1.0).unwrap();
        assert!(matches!(
            n.submit_sealed(txn, 1.0),
            SubmitOutcome::Rejected(_)
        ));
    }

    #[test]
    fn tick_cuts_on_size_and_flush_drains() {
        let mut n = node();
        for i in 0..25 {
            let ts = i as f64 * 0.01;
            n.submit(&alert(&format!("f{i}"), 0.9, ts), None, ts)
                .unwrap();
        }
        // At 0.3 s the leftover 5 txns are younger than the 2 s timeout.
        let blocks = n.tick(0.3);
        assert_eq!(blocks.len(), 2, "two full blocks of 10");
        assert_eq!(n.pending_len(), 5);
        // Once the oldest leftover crosses the timeout, tick cuts it too.
        let timed_out = n.tick(2.5);
        assert_eq!(timed_out.len(), 1);
        assert_eq!(timed_out[0].transactions.len(), 5);
        assert_eq!(n.pending_len(), 0);
        let rest = n.flush(3.0);
        assert!(rest.is_empty());
        assert!(n.chain.verify(&n.directory()).is_ok());
    }
}
