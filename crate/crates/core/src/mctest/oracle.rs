//! Exact association verdicts for finite joint laws.
//!
//! A finite law is associated iff `P(U ∩ V) ≥ P(U) P(V)` for every pair of
//! upper sets `U`, `V` of its support under the coordinatewise order, since
//! upper-set indicators generate all bounded non-decreasing functions.
//!
//! For association between blocks, every non-decreasing `f_k` of a block's
//! support factors as a non-decreasing map of the rank in some linear
//! extension of that block's support poset, and non-decreasing coordinate
//! maps preserve association. Enumerating linear extensions per block is
//! therefore exact.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::discrete::DiscreteJointDistribution;
use crate::error::{Error, Result};
use crate::partition::BlockPartition;
use crate::verdict::Witness;

/// Covariances below `-COV_TOL` count as negative.
pub const COV_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleBudget {
    /// Maximum support size of a law passed to the association oracle.
    pub max_support: usize,
    /// Maximum number of upper sets enumerated per law.
    pub max_upper_sets: usize,
    /// Maximum distinct points of one block's projected support.
    pub max_block_support: usize,
    pub max_blocks: usize,
    /// Maximum number of linear-extension combinations across blocks.
    pub max_combinations: usize,
    /// Maximum number of upper-set pairs evaluated over all block images.
    pub max_pair_evaluations: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_support: 20,
            max_upper_sets: 4096,
            max_block_support: 5,
            max_blocks: 3,
            max_combinations: 1_000_000,
            max_pair_evaluations: 2_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationOutcome {
    pub associated: bool,
    /// Most negative `P(U∩V) − P(U)P(V)` found (0 if none is negative).
    pub worst_covariance: f64,
    /// Upper sets of the worst pair; present whenever the worst covariance is negative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub upper_sets: usize,
    /// Block images checked (1 for the plain oracle).
    pub combinations: usize,
    /// For a block verdict: each block's support points in the chain order of the failing combination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_orders: Option<Vec<Vec<Vec<f64>>>>,
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Upper sets of the poset given by `succ[i]` = bitmask of points strictly
/// above `i`, with points indexed so that `j > i` whenever `j` is above `i`.
fn upper_sets(succ: &[u64], limit: usize) -> Result<Vec<u64>> {
    let m = succ.len();
    let mut out = Vec::new();
    // process points from the top of the order downwards
    fn rec(i: isize, mask: u64, succ: &[u64], out: &mut Vec<u64>, limit: usize) -> bool {
        if i < 0 {
            out.push(mask);
            return out.len() <= limit;
        }
        let iu = i as usize;
        if !rec(i - 1, mask, succ, out, limit) {
            return false;
        }
        if succ[iu] & !mask == 0 {
            return rec(i - 1, mask | (1 << iu), succ, out, limit);
        }
        true
    }
    if !rec(m as isize - 1, 0, succ, &mut out, limit) {
        return Err(Error::BudgetExceeded(format!(
            "more than {limit} upper sets"
        )));
    }
    Ok(out)
}

/// `P(mask)` by byte-wise table lookup: `tables[k][b]` is the mass of the
/// points `8k + i` for the set bits `i` of `b`.
struct MaskProb {
    tables: Vec<[f64; 256]>,
}

impl MaskProb {
    fn new(probs: &[f64]) -> Self {
        let tables = probs
            .chunks(8)
            .map(|chunk| {
                let mut t = [0.0; 256];
                for (b, slot) in t.iter_mut().enumerate() {
                    *slot = chunk.iter().enumerate().filter(|(i, _)| b & (1 << i) != 0).map(|(_, p)| p).sum();
                }
                t
            })
            .collect();
        Self { tables }
    }

    fn get(&self, mask: u64) -> f64 {
        self.tables.iter().enumerate().map(|(k, t)| t[((mask >> (8 * k)) & 0xff) as usize]).sum()
    }
}

/// Core of both oracles: points with a partial order given by `le(i, j)`.
fn associated_under(
    points: &[Vec<f64>],
    probs: &[f64],
    le: impl Fn(usize, usize) -> bool,
    budget: &OracleBudget,
    pairs_left: &mut u64,
) -> Result<(f64, Option<(u64, u64)>, usize, Vec<usize>)> {
    let m = points.len();
    if m > budget.max_support || m > 64 {
        return Err(Error::BudgetExceeded(format!(
            "support of {m} points exceeds the oracle budget of {}",
            budget.max_support.min(64)
        )));
    }
    // points below i come first, so everything above i has a larger index
    let mut order: Vec<usize> = (0..m).collect();
    let below_count: Vec<usize> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i && le(j, i)).count())
        .collect();
    order.sort_by_key(|&i| below_count[i]);
    let mut succ = vec![0u64; m];
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            if a != b && le(i, j) {
                succ[a] |= 1 << b;
            }
        }
    }
    let p: Vec<f64> = order.iter().map(|&i| probs[i]).collect();
    let ups = upper_sets(&succ, budget.max_upper_sets)?;
    let prob = MaskProb::new(&p);
    // the empty and the full set have zero covariance with everything
    let full = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let inner: Vec<(u64, f64)> = ups
        .iter()
        .filter(|&&u| u != 0 && u != full)
        .map(|&u| (u, prob.get(u)))
        .collect();
    let k = inner.len() as u64;
    let pairs = k * k.saturating_sub(1) / 2;
    if pairs > *pairs_left {
        return Err(Error::BudgetExceeded(format!(
            "more than {} upper-set pair evaluations",
            budget.max_pair_evaluations
        )));
    }
    *pairs_left -= pairs;
    let mut worst = 0.0;
    let mut arg = None;
    for (a, &(u, pu)) in inner.iter().enumerate() {
        for &(v, pv) in &inner[a + 1..] {
            let c = prob.get(u & v) - pu * pv;
            if c < worst {
                worst = c;
                arg = Some((u, v));
            }
        }
    }
    Ok((worst, arg, ups.len(), order))
}

fn unmask(mask: u64, order: &[usize], points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..order.len())
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| points[order[b]].clone())
        .collect()
}

/// Exact association of a finite law by enumerating pairs of upper sets.
pub fn exact_discrete_association(
    dist: &DiscreteJointDistribution,
    budget: &OracleBudget,
) -> Result<AssociationOutcome> {
    let pts = dist.support();
    let (worst, arg, n_up, order) =
        associated_under(
            pts,
            dist.probs(),
            |i, j| leq(&pts[i], &pts[j]),
            budget,
            &mut budget.max_pair_evaluations.clone(),
        )?;
    Ok(AssociationOutcome {
        associated: worst >= -COV_TOL,
        worst_covariance: worst,
        witness: arg.map(|(u, v)| Witness::UpperSets {
            upper_a: unmask(u, &order, pts),
            upper_b: unmask(v, &order, pts),
            covariance: worst,
        }),
        upper_sets: n_up,
        combinations: 1,
        block_orders: None,
    })
}

/// All linear extensions of the poset on `pts`, each as the list of point
/// indices from bottom to top.
pub(crate) fn linear_extensions(pts: &[Vec<f64>], limit: usize) -> Result<Vec<Vec<usize>>> {
    let m = pts.len();
    let mut below = vec![0u64; m];
    for i in 0..m {
        for j in 0..m {
            if i != j && leq(&pts[j], &pts[i]) {
                below[i] |= 1 << j;
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(
        placed: u64,
        m: usize,
        below: &[u64],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        if cur.len() == m {
            out.push(cur.clone());
            return out.len() <= limit;
        }
        for i in 0..m {
            if placed & (1 << i) == 0 && below[i] & !placed == 0 {
                cur.push(i);
                let ok = rec(placed | (1 << i), m, below, cur, out, limit);
                cur.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    if !rec(0, m, &below, &mut cur, &mut out, limit) {
        return Err(Error::BudgetExceeded(format!(
            "more than {limit} linear extensions"
        )));
    }
    Ok(out)
}

/// Odometer step over extension choices; false once every choice was visited.
fn advance(choice: &mut [usize], extensions: &[Vec<Vec<usize>>]) -> bool {
    for (c, ext) in choice.iter_mut().zip(extensions) {
        *c += 1;
        if *c < ext.len() {
            return true;
        }
        *c = 0;
    }
    false
}

/// Exact association between blocks of a finite law.
pub fn exact_discrete_block_association(
    dist: &DiscreteJointDistribution,
    partition: &BlockPartition,
    budget: &OracleBudget,
) -> Result<AssociationOutcome> {
    if dist.dim() != partition.index_count() {
        return Err(Error::DimensionMismatch {
            what: "distribution",
            expected: partition.index_count(),
            found: dist.dim(),
        });
    }
    let n = partition.block_count();
    if n > budget.max_blocks {
        return Err(Error::BudgetExceeded(format!(
            "{n} blocks exceed the oracle budget of {}",
            budget.max_blocks
        )));
    }
    if dist.len() > budget.max_support {
        return Err(Error::BudgetExceeded(format!(
            "support of {} points exceeds the oracle budget of {}",
            dist.len(),
            budget.max_support
        )));
    }
    // per block: distinct projected points, support-point → block-point map, extensions
    let mut projections = Vec::with_capacity(n);
    let mut extensions = Vec::with_capacity(n);
    let mut total: usize = 1;
    for b in 0..n {
        let (pts, idx) = dist.project(partition.block(b));
        if pts.len() > budget.max_block_support {
            return Err(Error::BudgetExceeded(format!(
                "block {} has {} support points, budget {}",
                b + 1,
                pts.len(),
                budget.max_block_support
            )));
        }
        let ext = linear_extensions(&pts, budget.max_combinations)?;
        total = total.saturating_mul(ext.len());
        if total > budget.max_combinations {
            return Err(Error::BudgetExceeded(format!(
                "more than {} block image combinations",
                budget.max_combinations
            )));
        }
        projections.push((pts, idx));
        extensions.push(ext);
    }
    let s = dist.len();
    let mut choice = vec![0usize; n];
    let mut worst_overall = 0.0;
    let mut witness = None;
    let mut block_orders = None;
    let mut max_up = 0;
    let mut combos = 0;
    let mut seen = HashSet::new();
    let mut pairs_left = budget.max_pair_evaluations;
    loop {
        // ranks[b][block point] under the chosen extension
        let ranks: Vec<Vec<usize>> = (0..n)
            .map(|b| {
                let ext = &extensions[b][choice[b]];
                let mut r = vec![0; ext.len()];
                for (pos, &pt) in ext.iter().enumerate() {
                    r[pt] = pos;
                }
                r
            })
            .collect();
        // the image keeps one point per support point; ranks are injective per
        // block, so only the order relation changes
        let image: Vec<Vec<f64>> = (0..s)
            .map(|i| {
                (0..n)
                    .map(|b| ranks[b][projections[b].1[i]] as f64)
                    .collect()
            })
            .collect();
        // distinct extensions often induce the same order on the support
        let relation: Vec<u64> = (0..s)
            .map(|i| (0..s).filter(|&j| leq(&image[i], &image[j])).fold(0u64, |m, j| m | (1 << j)))
            .collect();
        combos += 1;
        if !seen.insert(relation) {
            if !advance(&mut choice, &extensions) {
                break;
            }
            continue;
        }
        let (worst, arg, n_up, order) = associated_under(
            &image,
            dist.probs(),
            |i, j| leq(&image[i], &image[j]),
            budget,
            &mut pairs_left,
        )?;
        max_up = max_up.max(n_up);
        if worst < worst_overall {
            worst_overall = worst;
            let pts = dist.support();
            witness = arg.map(|(u, v)| Witness::UpperSets {
                upper_a: unmask(u, &order, pts),
                upper_b: unmask(v, &order, pts),
                covariance: worst,
            });
            block_orders = Some(
                (0..n)
                    .map(|b| {
                        extensions[b][choice[b]]
                            .iter()
                            .map(|&k| projections[b].0[k].clone())
                            .collect()
                    })
                    .collect(),
            );
        }
        if !advance(&mut choice, &extensions) {
            break;
        }
    }
    Ok(AssociationOutcome {
        associated: worst_overall >= -COV_TOL,
        worst_covariance: worst_overall,
        witness,
        upper_sets: max_up,
        combinations: combos,
        block_orders,
    })
}
