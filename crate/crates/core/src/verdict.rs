//! Structured outcomes of checks and statistical tests.

use serde::{Deserialize, Serialize};

use crate::mctest::FunctionPairWitness;
use crate::rng::SeedLineage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Violation,
    Inconclusive,
    Error,
}

impl Status {
    /// CLI exit code: 0 pass, 1 violation, 2 inconclusive, 3 error.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Violation => 1,
            Status::Inconclusive => 2,
            Status::Error => 3,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Violation => "VIOLATION",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Error => "ERROR",
        })
    }
}

/// Time-ordered rectangle `(s1, s2] × (t1, t2]` with `s1 ≤ s2 ≤ t1 ≤ t2` and
/// its increment `K(s1,t1) − K(s2,t1) − K(s1,t2) + K(s2,t2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleWitness {
    /// 1-based coordinate indices.
    pub k: usize,
    pub l: usize,
    pub s1: f64,
    pub s2: f64,
    pub t1: f64,
    pub t2: f64,
    pub value: f64,
}

/// Evidence attached to a verdict. Coordinate indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    CovarianceEntry {
        k: usize,
        l: usize,
        value: f64,
    },
    LevyAtom {
        k: usize,
        l: usize,
        point: [f64; 2],
        mass: f64,
    },
    Rectangle(RectangleWitness),
    MixedDerivative {
        k: usize,
        l: usize,
        s: f64,
        t: f64,
        estimate: f64,
    },
    Trajectory {
        /// 1-based atom index.
        atom: usize,
        path: Vec<Vec<f64>>,
        mass: f64,
    },
    UpperSets {
        upper_a: Vec<Vec<f64>>,
        upper_b: Vec<Vec<f64>>,
        covariance: f64,
    },
    FunctionPair(Box<FunctionPairWitness>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    /// Number of elementary checks performed (entries, rectangles, atoms, tests).
    pub checked: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<SeedLineage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    /// The worst witness found; always present for `Violation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub statistics: Statistics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check: impl Into<String>, status: Status) -> Self {
        Self {
            check: check.into(),
            status,
            witness: None,
            statistics: Statistics::default(),
            notes: Vec::new(),
        }
    }

    pub fn with_witness(mut self, witness: Option<Witness>) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}
