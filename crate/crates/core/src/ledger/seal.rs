//! Transaction sealing: canonical serialization, hashing, signatures.
//!
//! Canonical payload layout (fixed field order, each field a 4-byte
//! big-endian length prefix followed by UTF-8 bytes; reals rendered as
//! decimal strings with 6 fractional digits; absent optionals encode as the
//! empty string):
//!
//! ```text
//! flow_id | label | confidence | alert_ts | action | qos_score
//! ```
//!
//! The transaction digest is `SHA-256(payload || ts_str)` where `ts_str` is
//! the submission timestamp rendered with the same 6-digit convention, and
//! the signature is Ed25519 over the 32-byte digest.

use super::LedgerError;
use crate::ids::Alert;
use crate::label::ClassLabel;
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Render a real for hashing and storage: 6 fractional digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.6}")
}

fn put_field(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    buf.extend_from_slice(bytes);
}

fn take_field<'a>(buf: &'a [u8], pos: &mut usize) -> Result<&'a [u8], LedgerError> {
    if *pos + 4 > buf.len() {
        return Err(LedgerError::Malformed(
            "field length prefix truncated".into(),
        ));
    }
    let len = u32::from_be_bytes(buf[*pos..*pos + 4].try_into().unwrap()) as usize;
    *pos += 4;
    if *pos + len > buf.len() {
        return Err(LedgerError::Malformed("field body truncated".into()));
    }
    let out = &buf[*pos..*pos + len];
    *pos += len;
    Ok(out)
}

/// The enforcement outcome recorded alongside an alert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: String,
    pub qos_score: f64,
}

/// A signing identity: an id string plus an Ed25519 keypair. Peers verify
/// signatures against the public half registered in a [`Directory`].
#[derive(Debug, Clone)]
pub struct SigningIdentity {
    pub id: String,
    key: SigningKey,
}

impl SigningIdentity {
    /// Deterministic identity from a 32-byte seed.
    pub fn from_seed(id: impl Into<String>, seed: [u8; 32]) -> SigningIdentity {
        SigningIdentity {
            id: id.into(),
            key: SigningKey::from_bytes(&seed),
        }
    }

    /// Derive a seed from an id string and a numeric seed, for reproducible
    /// simulations.
    pub fn derive(id: &str, seed: u64) -> SigningIdentity {
        let mut hasher = Sha256::new();
        hasher.update(id.as_bytes());
        hasher.update(seed.to_be_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        SigningIdentity::from_seed(id, digest)
    }

    pub fn public_key(&self) -> VerifyingKey {
        self.key.verifying_key()
    }

    pub fn sign(&self, digest: &[u8; 32]) -> [u8; 64] {
        self.key.sign(digest).to_bytes()
    }
}

/// Registry of known submitter public keys.
#[derive(Debug, Clone, Default)]
pub struct Directory {
    keys: BTreeMap<String, VerifyingKey>,
}

impl Directory {
    pub fn new() -> Directory {
        Directory::default()
    }

    pub fn register(&mut self, identity: &SigningIdentity) {
        self.keys.insert(identity.id.clone(), identity.public_key());
    }

    /// Register a public key from its 32-byte encoding.
    pub fn register_raw(
        &mut self,
        id: impl Into<String>,
        key: &[u8; 32],
    ) -> Result<(), LedgerError> {
        let key = VerifyingKey::from_bytes(key)
            .map_err(|e| LedgerError::Malformed(format!("bad public key: {e}")))?;
        self.keys.insert(id.into(), key);
        Ok(())
    }

    pub fn lookup(&self, id: &str) -> Option<&VerifyingKey> {
        self.keys.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, [u8; 32])> {
        self.keys
            .iter()
            .map(|(id, key)| (id.as_str(), key.to_bytes()))
    }

    pub fn verify(&self, txn: &AlertTransaction) -> Result<(), String> {
        let key = self
            .lookup(&txn.submitter)
            .ok_or_else(|| format!("unknown submitter {:?}", txn.submitter))?;
        let sig_bytes: [u8; 64] = txn
            .signature
            .as_slice()
            .try_into()
            .map_err(|_| "signature length".to_string())?;
        let sig = Signature::from_bytes(&sig_bytes);
        key.verify(&txn.digest, &sig)
            .map_err(|_| "signature verification failed".to_string())
    }
}

/// A sealed alert transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertTransaction {
    /// Canonical byte payload (see module docs).
    pub payload: Vec<u8>,
    /// Submission timestamp, seconds.
    pub timestamp: f64,
    /// SHA-256 over payload || timestamp string.
    pub digest: [u8; 32],
    /// Ed25519 signature over the digest.
    pub signature: Vec<u8>,
    pub submitter: String,
}

impl AlertTransaction {
    /// Recompute the digest from the stored payload and timestamp.
    pub fn expected_digest(&self) -> [u8; 32] {
        digest_of(&self.payload, self.timestamp)
    }
}

pub fn digest_of(payload: &[u8], timestamp: f64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(payload);
    hasher.update(fmt_real(timestamp).as_bytes());
    hasher.finalize().into()
}

/// Build the canonical payload bytes for an alert and optional action.
pub fn encode_payload(alert: &Alert, action: Option<&ActionRecord>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(96);
    put_field(&mut buf, alert.flow_id.as_bytes());
    put_field(&mut buf, alert.label.name().as_bytes());
    put_field(&mut buf, fmt_real(alert.confidence).as_bytes());
    put_field(&mut buf, fmt_real(alert.timestamp).as_bytes());
    match action {
        Some(a) => {
            put_field(&mut buf, a.action.as_bytes());
            put_field(&mut buf, fmt_real(a.qos_score).as_bytes());
        }
        None => {
            put_field(&mut buf, b"");
            put_field(&mut buf, b"");
        }
    }
    buf
}

/// The decoded view of a canonical payload.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPayload {
    pub flow_id: String,
    pub label: ClassLabel,
    pub confidence: f64,
    pub alert_ts: f64,
    pub action: Option<String>,
    pub qos_score: Option<f64>,
}

pub fn parse_payload(payload: &[u8]) -> Result<ParsedPayload, LedgerError> {
    let mut pos = 0;
    let flow_id = std::str::from_utf8(take_field(payload, &mut pos)?)
        .map_err(|_| LedgerError::Malformed("flow_id not UTF-8".into()))?
        .to_string();
    let label_raw = std::str::from_utf8(take_field(payload, &mut pos)?)
        .map_err(|_| LedgerError::Malformed("label not UTF-8".into()))?
        .to_string();
    let label = ClassLabel::parse(&label_raw)
        .ok_or_else(|| LedgerError::Malformed(format!("unknown label {label_raw:?}")))?;
    let confidence = parse_real(take_field(payload, &mut pos)?, "confidence")?
        .ok_or_else(|| LedgerError::Malformed("confidence missing".into()))?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(LedgerError::Malformed(format!(
            "confidence {confidence} out of range"
        )));
    }
    let alert_ts = parse_real(take_field(payload, &mut pos)?, "alert_ts")?
        .ok_or_else(|| LedgerError::Malformed("alert_ts missing".into()))?;
    let action_raw = std::str::from_utf8(take_field(payload, &mut pos)?)
        .map_err(|_| LedgerError::Malformed("action not UTF-8".into()))?
        .to_string();
    let qos_score = parse_real(take_field(payload, &mut pos)?, "qos_score")?;
    if pos != payload.len() {
        return Err(LedgerError::Malformed(
            "trailing bytes after payload fields".into(),
        ));
    }
    Ok(ParsedPayload {
        flow_id,
        label,
        confidence,
        alert_ts,
        action: if action_raw.is_empty() {
            None
        } else {
            Some(action_raw)
        },
        qos_score,
    })
}

fn parse_real(bytes: &[u8], what: &str) -> Result<Option<f64>, LedgerError> {
    if bytes.is_empty() {
        return Ok(None);
    }
    let s = std::str::from_utf8(bytes)
        .map_err(|_| LedgerError::Malformed(format!("{what} not UTF-8")))?;
    let v: f64 = s
        .parse()
        .map_err(|_| LedgerError::Malformed(format!("{what} not numeric: {s:?}")))?;
    if !v.is_finite() {
        return Err(LedgerError::Malformed(format!("{what} not finite")));
    }
    Ok(Some(v))
}

/// Seal an alert: canonical payload, SHA-256 digest over payload and the
/// submission timestamp, Ed25519 signature over the digest.
pub fn seal_transaction(
    alert: &Alert,
    action: Option<&ActionRecord>,
    identity: &SigningIdentity,
    now: f64,
) -> Result<AlertTransaction, LedgerError> {
    if !alert.confidence.is_finite() || !alert.timestamp.is_finite() || !now.is_finite() {
        return Err(LedgerError::SerializationFailure(
            "non-finite alert field".into(),
        ));
    }
    let payload = encode_payload(alert, action);
    let digest = digest_of(&payload, now);
    let signature = identity.sign(&digest).to_vec();
    Ok(AlertTransaction {
        payload,
        timestamp: now,
        digest,
        signature,
        submitter: identity.id.clone(),
    })
}
