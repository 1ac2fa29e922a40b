//! Simulation and verification of association between blocks.
//!
//! A family of random variables indexed by `I = I_1 ∪ … ∪ I_n` is associated
//! between blocks when every vector `(f_1(X(I_1)), …, f_n(X(I_n)))` built from
//! coordinatewise non-decreasing block functions is associated. This crate
//! provides:
//!
//! * the domain types ([`BlockPartition`], [`CovarianceMatrix`],
//!   [`DiscreteLevyMeasure`], [`IdTriplet`], [`CovFunction`], …) and the
//!   support predicates used by the characterizations,
//! * deterministic [`checkers`] for Gaussian vectors, infinitely divisible
//!   vectors and Gaussian processes,
//! * seed-deterministic samplers in [`simulate`],
//! * exact oracles and Monte Carlo testers in [`mctest`],
//! * a central limit theorem and invariance principle harness in [`limits`].
//!
//! Index conventions: the Rust API is 0-based everywhere. JSON documents and
//! witnesses use 1-based coordinate indices.

pub mod checkers;
pub mod covfun;
pub mod discrete;
pub mod error;
pub mod levy;
pub mod limits;
pub mod matrix;
pub mod mctest;
pub mod partition;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod support;
pub mod verdict;

pub use covfun::{increments_covariance, CovFunction, CovFunctionSpec, TimeGrid};
pub use discrete::DiscreteJointDistribution;
pub use error::{Error, Result};
pub use levy::{project_levy_pair, Atom, DiscreteLevyMeasure, IdTriplet};
pub use matrix::CovarianceMatrix;
pub use partition::{validate_partition, BlockPartition};
pub use rng::SeedLineage;
pub use support::{membership_s, monotone_trajectory_predicate};
pub use verdict::{Status, Verdict, Witness};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
