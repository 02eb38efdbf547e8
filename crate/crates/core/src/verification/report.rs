use serde::{Deserialize, Serialize};

use crate::decomposition::{Lottery, Outcome};

/// Evidence for a failed check, enough to reproduce it by re-evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `envier` values `envied`'s share above her own. `outcome` is set for ex-post checks.
    Envy {
        envier: usize,
        envied: usize,
        own: f64,
        other: f64,
        outcome: Option<usize>,
    },
    /// Agent's utility falls short of the proportional share.
    Proportionality {
        agent: usize,
        utility: f64,
        share: f64,
        outcome: Option<usize>,
    },
    OverAllocation {
        outcome: usize,
        item: usize,
        total: f64,
    },
    /// No serial-dictatorship ordering explains the outcome.
    NotSerialDictatorship {
        outcome: usize,
        remaining: Vec<usize>,
    },
    /// An alternative giving every agent at least `(1 + epsilon)` times her utility.
    Dominator {
        epsilon: f64,
        original: Vec<f64>,
        improved: Vec<f64>,
        lottery: Lottery,
    },
    DominatingOutcome {
        epsilon: f64,
        original: Vec<f64>,
        improved: Vec<f64>,
        allocation: Outcome,
    },
    /// A scalar that should have matched a target.
    Value { label: String, value: f64, target: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, witnesses: Vec<Witness>, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: witnesses.is_empty(),
            detail: detail.into(),
            witnesses,
        }
    }
}

/// Outcome of one or more checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn single(check: CheckResult) -> Self {
        VerificationReport { checks: vec![check] }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.checks.iter().flat_map(|c| &c.witnesses)
    }
}
