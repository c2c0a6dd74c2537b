//! Machine-readable verification reports.
//!
//! Reports are byte-stable for a fixed seed and version: trials are
//! sorted by index before emission, struct field order is fixed, and
//! nothing time-dependent enters the serialized payload (wall-clock
//! timing goes to stderr in the CLI rendering instead).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Outcome of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrialVerdict {
    Pass,
    Fail,
    Undecided,
}

/// One checked statement instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub statement: String,
    pub inputs_digest: String,
    pub lhs: String,
    pub rhs: String,
    pub margin: String,
    pub verdict: TrialVerdict,
}

/// A full suite run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub trials_requested: usize,
    pub pass: usize,
    pub fail: usize,
    pub undecided: usize,
    pub trials: Vec<TrialRecord>,
}

impl VerificationReport {
    pub fn new(suite: &str, p: usize, q: usize, seed: u64, trials_requested: usize) -> Self {
        VerificationReport {
            suite: suite.to_string(),
            p,
            q,
            seed,
            trials_requested,
            pass: 0,
            fail: 0,
            undecided: 0,
            trials: Vec::new(),
        }
    }

    pub fn extend(&mut self, mut records: Vec<TrialRecord>) {
        self.trials.append(&mut records);
    }

    /// Sort by (index, statement) and recompute the counters.
    pub fn finalize(&mut self) {
        self.trials
            .sort_by(|a, b| (a.index, &a.statement).cmp(&(b.index, &b.statement)));
        self.pass = self
            .trials
            .iter()
            .filter(|t| t.verdict == TrialVerdict::Pass)
            .count();
        self.fail = self
            .trials
            .iter()
            .filter(|t| t.verdict == TrialVerdict::Fail)
            .count();
        self.undecided = self
            .trials
            .iter()
            .filter(|t| t.verdict == TrialVerdict::Undecided)
            .count();
    }

    /// 0 when everything passed, 1 on any failure, 2 when the only
    /// non-passes are undecided.
    pub fn exit_code(&self) -> i32 {
        if self.fail > 0 {
            1
        } else if self.undecided > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Short stable digest of trial inputs.
pub fn digest(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    let out = hasher.finalize();
    out[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let mut r = VerificationReport::new("demo", 2, 3, 0, 1);
        r.extend(vec![TrialRecord {
            index: 0,
            statement: "s".into(),
            inputs_digest: digest(&["x"]),
            lhs: "1".into(),
            rhs: "1".into(),
            margin: "0".into(),
            verdict: TrialVerdict::Pass,
        }]);
        r.finalize();
        assert_eq!(r.exit_code(), 0);
        r.trials[0].verdict = TrialVerdict::Undecided;
        r.finalize();
        assert_eq!(r.exit_code(), 2);
        r.trials[0].verdict = TrialVerdict::Fail;
        r.finalize();
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest(&["a", "b"]), digest(&["a", "b"]));
        assert_ne!(digest(&["a", "b"]), digest(&["ab"]));
    }
}
