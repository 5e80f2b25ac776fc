//! Pass/fail records produced by the verifiers.

use serde::{Serialize, Serializer};

use crate::matrix::C64;

/// One verified identity: a measured `value` against a `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The identity being checked, written out as a formula.
    #[serde(rename = "paper_anchor")]
    pub anchor: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    /// `None` when the check was skipped; `reason` then says why.
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Check {
    /// Passes iff `value <= threshold` (NaN fails).
    pub fn at_most(name: impl Into<String>, anchor: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            value: Some(value),
            threshold: Some(threshold),
            pass: Some(value <= threshold),
            reason: None,
        }
    }

    /// Passes iff `value >= threshold`.
    pub fn at_least(name: impl Into<String>, anchor: &str, value: f64, threshold: f64) -> Self {
        Self {
            pass: Some(value >= threshold),
            ..Self::at_most(name, anchor, value, threshold)
        }
    }

    pub fn flag(name: impl Into<String>, anchor: &str, pass: bool, reason: Option<String>) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            value: None,
            threshold: None,
            pass: Some(pass),
            reason,
        }
    }

    pub fn skipped(name: impl Into<String>, anchor: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            value: None,
            threshold: None,
            pass: None,
            reason: Some(reason.into()),
        }
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            suite: suite.into(),
            seed,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Keeps the worst value per check name: collapses per-trial checks into
    /// one entry carrying the maximum measured value.
    pub fn push_max(&mut self, name: &str, anchor: &str, value: f64, threshold: f64) {
        if let Some(existing) = self.checks.iter_mut().find(|c| c.name == name) {
            let worst = existing.value.unwrap_or(f64::NEG_INFINITY);
            if value > worst || value.is_nan() {
                *existing = Check::at_most(name, anchor, value, threshold);
            }
        } else {
            self.checks.push(Check::at_most(name, anchor, value, threshold));
        }
    }

    pub fn passed(&self) -> bool {
        !self.checks.iter().any(Check::failed)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }
}

/// Serializes a complex number as an `[re, im]` pair.
pub fn serialize_complex<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}
