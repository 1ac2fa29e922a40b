//! Finite-support joint distributions, the substrate of the exact oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct DiscreteJointDistribution {
    dim: usize,
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl TryFrom<DistRepr> for DiscreteJointDistribution {
    type Error = Error;

    fn try_from(r: DistRepr) -> Result<Self> {
        Self::new(r.support, r.probs)
    }
}

impl From<DiscreteJointDistribution> for DistRepr {
    fn from(d: DiscreteJointDistribution) -> Self {
        Self {
            support: d.support,
            probs: d.probs,
        }
    }
}

impl DiscreteJointDistribution {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("support is empty".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                what: "probability vector",
                expected: support.len(),
                found: probs.len(),
            });
        }
        let dim = support[0].len();
        if dim == 0 {
            return Err(Error::InvalidDistribution(
                "points must have at least one coordinate".into(),
            ));
        }
        for (i, x) in support.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "support point",
                    expected: dim,
                    found: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "support point {} is not finite",
                    i + 1
                )));
            }
            if support[..i].contains(x) {
                return Err(Error::InvalidDistribution(format!(
                    "support point {} is repeated",
                    i + 1
                )));
            }
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "probabilities must be non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            dim,
            support,
            probs,
        })
    }

    /// Uniform law on the given points.
    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Law of independent `(self, other)` on concatenated coordinates.
    pub fn product(&self, other: &Self) -> Self {
        let mut support = Vec::with_capacity(self.len() * other.len());
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for (x, p) in self.support.iter().zip(&self.probs) {
            for (y, q) in other.support.iter().zip(&other.probs) {
                support.push(x.iter().chain(y).copied().collect());
                probs.push(p * q);
            }
        }
        Self {
            dim: self.dim + other.dim,
            support,
            probs,
        }
    }

    /// Distinct projections onto `coords` (in first-appearance order) and,
    /// for each support point, the index of its projection.
    pub fn project(&self, coords: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut index = Vec::with_capacity(self.len());
        for x in &self.support {
            let p: Vec<f64> = coords.iter().map(|&c| x[c]).collect();
            match points.iter().position(|q| *q == p) {
                Some(i) => index.push(i),
                None => {
                    index.push(points.len());
                    points.push(p);
                }
            }
        }
        (points, index)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, p) in self.support.iter().zip(&self.probs) {
            for (acc, v) in m.iter_mut().zip(x) {
                *acc += p * v;
            }
        }
        m
    }
}
