//! Traffic class labels shared by the dataset loader, the classifiers, and
//! the enforcement policy.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The eight-way traffic class set: benign traffic plus seven attack families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal,
    DoS,
    DDoS,
    BruteForce,
    WebAttack,
    Exploit,
    Probe,
    Botnet,
}

impl ClassLabel {
    /// All labels in declaration order.
    pub const ALL: [ClassLabel; 8] = [
        ClassLabel::Normal,
        ClassLabel::DoS,
        ClassLabel::DDoS,
        ClassLabel::BruteForce,
        ClassLabel::WebAttack,
        ClassLabel::Exploit,
        ClassLabel::Probe,
        ClassLabel::Botnet,
    ];

    /// Fixed severity rank used to break argmax ties deterministically.
    /// Higher rank wins: DDoS > DoS > Botnet > Exploit > BruteForce >
    /// WebAttack > Probe > Normal.
    pub fn severity_rank(self) -> u8 {
        match self {
            ClassLabel::DDoS => 7,
            ClassLabel::DoS => 6,
            ClassLabel::Botnet => 5,
            ClassLabel::Exploit => 4,
            ClassLabel::BruteForce => 3,
            ClassLabel::WebAttack => 2,
            ClassLabel::Probe => 1,
            ClassLabel::Normal => 0,
        }
    }

    pub fn is_attack(self) -> bool {
        self != ClassLabel::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "Normal",
            ClassLabel::DoS => "DoS",
            ClassLabel::DDoS => "DDoS",
            ClassLabel::BruteForce => "BruteForce",
            ClassLabel::WebAttack => "WebAttack",
            ClassLabel::Exploit => "Exploit",
            ClassLabel::Probe => "Probe",
            ClassLabel::Botnet => "Botnet",
        }
    }

    /// Parse a label string. Accepts the canonical names plus the spellings
    /// found in CICFlowMeter-style CSV exports ("Brute Force", "BFA",
    /// "Web-Attack", "U2R", ...). Matching is case- and separator-insensitive.
    pub fn parse(s: &str) -> Option<ClassLabel> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "normal" | "benign" => Some(ClassLabel::Normal),
            "dos" => Some(ClassLabel::DoS),
            "ddos" => Some(ClassLabel::DDoS),
            "bruteforce" | "bfa" | "brute" => Some(ClassLabel::BruteForce),
            "webattack" | "webattacks" | "web" => Some(ClassLabel::WebAttack),
            "exploit" | "exploits" | "exploitation" | "u2r" => Some(ClassLabel::Exploit),
            "probe" | "probing" | "portscan" => Some(ClassLabel::Probe),
            "botnet" | "bot" => Some(ClassLabel::Botnet),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pick the winner among `candidates` when scores tie exactly: the label with
/// the highest severity rank.
pub fn break_tie(candidates: impl IntoIterator<Item = ClassLabel>) -> Option<ClassLabel> {
    candidates.into_iter().max_by_key(|l| l.severity_rank())
}
