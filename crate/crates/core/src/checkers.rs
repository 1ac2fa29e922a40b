//! Deterministic checks of the analytic characterizations.
//!
//! Exact characterizations (Gaussian vectors, Gaussian processes through
//! their covariance functions) yield `Pass`/`Violation`. Sufficient-only
//! conditions (infinitely divisible vectors and processes) yield
//! `Pass`/`Inconclusive`: failing them says nothing about the law itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covfun::CovFunction;
use crate::error::{Error, Result};
use crate::levy::{DiscreteLevyMeasure, IdTriplet};
use crate::matrix::CovarianceMatrix;
use crate::partition::BlockPartition;
use crate::support::{membership_s, monotone_trajectory_predicate};
use crate::verdict::{RectangleWitness, Status, Verdict, Witness};

/// Absolute tolerance for exact matrix entries.
pub const ENTRY_TOL: f64 = 1e-12;
/// Relative tolerance (times the kernel scale) for evaluated rectangles.
pub const RECTANGLE_RTOL: f64 = 1e-9;
/// Relative tolerance (times the kernel scale) for finite differences.
pub const DERIVATIVE_RTOL: f64 = 1e-6;
/// Default cap on the number of times in a rectangle enumeration.
pub const DEFAULT_TIME_BUDGET: usize = 25;

const SUFFICIENT_ONLY: &str =
    "the condition is sufficient only; an inconclusive verdict does not mean the law fails block association";

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Most negative cross-block entry `(k, l, σ_kl)`, 0-based, if any pair exists.
fn worst_cross_entry(
    sigma: &CovarianceMatrix,
    partition: &BlockPartition,
) -> Option<(usize, usize, f64)> {
    partition
        .cross_block_pairs()
        .map(|(k, l)| (k, l, sigma.get(k, l)))
        .fold(None, |acc, cur| match acc {
            Some(best) if best.2 <= cur.2 => Some(best),
            _ => Some(cur),
        })
}

/// Gaussian vector with covariance `Σ`: associated between blocks iff
/// `σ_kl ≥ 0` for every pair `k, l` in different blocks.
pub fn gaussian_block_association(
    sigma: &CovarianceMatrix,
    partition: &BlockPartition,
) -> Result<Verdict> {
    check_dim("covariance matrix", partition.index_count(), sigma.dim())?;
    let worst = worst_cross_entry(sigma, partition);
    let status = match worst {
        Some((_, _, v)) if v < -ENTRY_TOL => Status::Violation,
        _ => Status::Pass,
    };
    let mut verdict = Verdict::new("gaussian-block-association", status).with_witness(worst.map(
        |(k, l, value)| Witness::CovarianceEntry {
            k: k + 1,
            l: l + 1,
            value,
        },
    ));
    verdict.statistics.checked = partition.cross_block_pairs().count();
    verdict.statistics.tolerance = Some(ENTRY_TOL);
    Ok(verdict)
}

fn in_closed_quadrants(p: &[f64]) -> bool {
    (p[0] >= 0.0 && p[1] >= 0.0) || (p[0] <= 0.0 && p[1] <= 0.0)
}

/// First cross-block pair whose two-dimensional characteristic puts mass
/// outside `(R_−)² ∪ (R_+)²`, with the offending atom.
fn first_quadrant_failure(
    nu: &DiscreteLevyMeasure,
    partition: &BlockPartition,
) -> Result<Option<Witness>> {
    for (k, l) in partition.cross_block_pairs() {
        let proj = nu.project_pair(k, l)?;
        if let Some(a) = proj
            .atoms()
            .iter()
            .find(|a| !in_closed_quadrants(&a.location))
        {
            return Ok(Some(Witness::LevyAtom {
                k: k + 1,
                l: l + 1,
                point: [a.location[0], a.location[1]],
                mass: a.mass,
            }));
        }
    }
    Ok(None)
}

/// Sufficient conditions for an `ID(a, Σ, ν)` vector to be associated
/// between blocks: non-negative cross-block `σ_kl`, and every cross-block
/// `ν_kl` concentrated on the closed quadrants `(R_−)² ∪ (R_+)²`.
///
/// The same pair of conditions is necessary and sufficient for every
/// marginal `X_t` of the Lévy process generated by the triplet to be
/// associated between blocks; for a single vector it is only sufficient.
pub fn id_sufficient_conditions(
    triplet: &IdTriplet,
    partition: &BlockPartition,
) -> Result<Verdict> {
    check_dim("triplet", partition.index_count(), triplet.dim())?;
    let mut verdict = Verdict::new("id-sufficient-conditions", Status::Pass);
    verdict.statistics.checked = partition.cross_block_pairs().count();
    verdict.statistics.tolerance = Some(ENTRY_TOL);

    let gaussian = worst_cross_entry(triplet.gaussian(), partition);
    if let Some((k, l, value)) = gaussian.filter(|w| w.2 < -ENTRY_TOL) {
        verdict.status = Status::Inconclusive;
        verdict.witness = Some(Witness::CovarianceEntry {
            k: k + 1,
            l: l + 1,
            value,
        });
        verdict
            .notes
            .push("condition (i) fails: negative cross-block Gaussian covariance".into());
        verdict.notes.push(SUFFICIENT_ONLY.into());
        return Ok(verdict);
    }
    if let Some(w) = first_quadrant_failure(triplet.levy(), partition)? {
        verdict.status = Status::Inconclusive;
        verdict.witness = Some(w);
        verdict.notes.push(
            "condition (ii) fails: a cross-block nu_kl charges an open mixed-sign quadrant".into(),
        );
        verdict.notes.push(SUFFICIENT_ONLY.into());
    }
    Ok(verdict)
}

/// The two equivalent forms of the Lévy-measure condition:
/// `(projections, membership)` where `projections` says every cross-block
/// `ν_kl` sits in the closed quadrants and `membership` says every atom of
/// `ν` lies in `S`. The two are always equal.
pub fn levy_support_equivalence(
    nu: &DiscreteLevyMeasure,
    partition: &BlockPartition,
) -> Result<(bool, bool)> {
    check_dim("Levy measure", partition.index_count(), nu.dim())?;
    let projections = first_quadrant_failure(nu, partition)?.is_none();
    let mut membership = true;
    for a in nu.atoms() {
        if !membership_s(&a.location, partition)? {
            membership = false;
            break;
        }
    }
    Ok((projections, membership))
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument(
            "times must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// L-superadditivity of every `K^{k,l}` on `{s ≤ t}`, checked on all
/// non-degenerate rectangles `s1 < s2 ≤ t1 < t2` drawn from `times`.
/// `Pass` iff every increment is `≥ −1e-9 · scale`, `scale = max |K|` over
/// the grid. The worst rectangle is always reported.
pub fn l_superadditivity_check(cov: &CovFunction, times: &[f64]) -> Result<Verdict> {
    l_superadditivity_check_with_budget(cov, times, DEFAULT_TIME_BUDGET)
}

pub fn l_superadditivity_check_with_budget(
    cov: &CovFunction,
    times: &[f64],
    max_times: usize,
) -> Result<Verdict> {
    validate_times(times)?;
    if times.len() > max_times {
        return Err(Error::BudgetExceeded(format!(
            "{} times exceed the rectangle budget of {max_times}",
            times.len()
        )));
    }
    let d = cov.dim();
    let m = times.len();
    // table[(k*d + l)][i*m + j] = K^{k,l}(t_i, t_j)
    let mut table = vec![vec![0.0; m * m]; d * d];
    for k in 0..d {
        for l in 0..d {
            for i in 0..m {
                for j in 0..m {
                    table[k * d + l][i * m + j] = cov.eval(k, l, times[i], times[j])?;
                }
            }
        }
    }
    let scale = table.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tolerance = RECTANGLE_RTOL * scale;

    // (value, k, l, a, b, c, e); ties resolve to the earliest enumeration order.
    let per_pair: Vec<(usize, Option<(f64, usize, usize, usize, usize)>)> = (0..d * d)
        .into_par_iter()
        .map(|kl| {
            let t = &table[kl];
            let mut count = 0;
            let mut worst: Option<(f64, usize, usize, usize, usize)> = None;
            for a in 0..m {
                for b in (a + 1)..m {
                    for c in b..m {
                        for e in (c + 1)..m {
                            let v = t[a * m + c] - t[b * m + c] - t[a * m + e] + t[b * m + e];
                            count += 1;
                            if worst.is_none_or(|w| v < w.0) {
                                worst = Some((v, a, b, c, e));
                            }
                        }
                    }
                }
            }
            (count, worst)
        })
        .collect();

    let checked = per_pair.iter().map(|p| p.0).sum();
    let mut worst: Option<RectangleWitness> = None;
    for (kl, (_, w)) in per_pair.iter().enumerate() {
        if let Some((value, a, b, c, e)) = *w {
            if worst.as_ref().is_none_or(|cur| value < cur.value) {
                worst = Some(RectangleWitness {
                    k: kl / d + 1,
                    l: kl % d + 1,
                    s1: times[a],
                    s2: times[b],
                    t1: times[c],
                    t2: times[e],
                    value,
                });
            }
        }
    }
    let status = match &worst {
        Some(w) if w.value < -tolerance => Status::Violation,
        _ => Status::Pass,
    };
    let mut verdict =
        Verdict::new("l-superadditivity", status).with_witness(worst.map(Witness::Rectangle));
    verdict.statistics.checked = checked;
    verdict.statistics.tolerance = Some(tolerance);
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    /// 1-based coordinates.
    pub k: usize,
    pub l: usize,
    pub s: f64,
    pub t: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDerivativeReport {
    pub verdict: Verdict,
    pub estimates: Vec<DerivativeEstimate>,
}

/// Central finite-difference estimate of `∂²K^{k,l}/∂s∂t` at every
/// off-diagonal pair of `times`. `Pass` iff every estimate is
/// `≥ −1e-6 · scale`.
pub fn mixed_derivative_check(
    cov: &CovFunction,
    times: &[f64],
    h: f64,
) -> Result<MixedDerivativeReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    validate_times(times)?;
    let d = cov.dim();
    let scale = cov.scale_over(times)?;
    let tolerance = DERIVATIVE_RTOL * scale;
    let mut estimates = Vec::new();
    for &s in times {
        for &t in times {
            if s == t {
                continue;
            }
            if (s - t).abs() <= 2.0 * h || s - h < 0.0 || t - h < 0.0 {
                return Err(Error::StepTooLarge { s, t, h });
            }
            for k in 0..d {
                for l in 0..d {
                    let v = (cov.eval(k, l, s + h, t + h)?
                        - cov.eval(k, l, s + h, t - h)?
                        - cov.eval(k, l, s - h, t + h)?
                        + cov.eval(k, l, s - h, t - h)?)
                        / (4.0 * h * h);
                    estimates.push(DerivativeEstimate {
                        k: k + 1,
                        l: l + 1,
                        s,
                        t,
                        estimate: v,
                    });
                }
            }
        }
    }
    let worst = estimates
        .iter()
        .fold(None::<&DerivativeEstimate>, |acc, e| match acc {
            Some(w) if w.estimate <= e.estimate => Some(w),
            _ => Some(e),
        });
    let status = match worst {
        Some(w) if w.estimate < -tolerance => Status::Violation,
        _ => Status::Pass,
    };
    let mut verdict = Verdict::new("mixed-derivative", status).with_witness(worst.map(|w| {
        Witness::MixedDerivative {
            k: w.k,
            l: w.l,
            s: w.s,
            t: w.t,
            estimate: w.estimate,
        }
    }));
    verdict.statistics.checked = estimates.len();
    verdict.statistics.tolerance = Some(tolerance);
    Ok(MixedDerivativeReport { verdict, estimates })
}

/// An atom of the Lévy measure of `(X_0, X_{t_1}, …, X_{t_n})`: a
/// trajectory `x_0, …, x_n` of `d`-dimensional points with its mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAtom {
    pub path: Vec<Vec<f64>>,
    pub mass: f64,
}

/// Support condition for a Gaussian-free infinitely divisible process:
/// every atom is a monotone trajectory, constant from `x_1` on, or has a
/// single jump. Sufficient only, so failure is `Inconclusive`.
pub fn id_process_support_check(atoms: &[TrajectoryAtom]) -> Result<Verdict> {
    if let Some(first) = atoms.first() {
        let n = first.path.len();
        let d = first.path.first().map_or(0, Vec::len);
        for a in atoms {
            if a.path.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "trajectory length",
                    expected: n,
                    found: a.path.len(),
                });
            }
            if let Some(p) = a.path.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch {
                    what: "trajectory point",
                    expected: d,
                    found: p.len(),
                });
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "non-positive atom mass {}",
                    a.mass
                )));
            }
        }
    }
    let mut verdict = Verdict::new("id-process-support", Status::Pass);
    verdict.statistics.checked = atoms.len();
    for (i, a) in atoms.iter().enumerate() {
        if !monotone_trajectory_predicate(&a.path)? {
            verdict.status = Status::Inconclusive;
            verdict.witness = Some(Witness::Trajectory {
                atom: i + 1,
                path: a.path.clone(),
                mass: a.mass,
            });
            verdict.notes.push(SUFFICIENT_ONLY.into());
            break;
        }
    }
    Ok(verdict)
}
