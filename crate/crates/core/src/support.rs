//! Support predicates for Lévy measures of block-associated laws.

use crate::error::{Error, Result};
use crate::partition::BlockPartition;

/// Whether `x` lies in `S = (R_+)^{|I|} ∪ (R_−)^{|I|} ∪ U`, where `U` holds
/// the vectors supported inside a single block. Orthants are closed.
pub fn membership_s(x: &[f64], partition: &BlockPartition) -> Result<bool> {
    if x.len() != partition.index_count() {
        return Err(Error::DimensionMismatch {
            what: "point",
            expected: partition.index_count(),
            found: x.len(),
        });
    }
    if x.iter().all(|&v| v >= 0.0) || x.iter().all(|&v| v <= 0.0) {
        return Ok(true);
    }
    // Not all zero here, so the only candidate block is the one of the
    // first non-zero coordinate.
    let first = x
        .iter()
        .position(|&v| v != 0.0)
        .expect("non-zero coordinate exists");
    let block = partition.block_of(first);
    Ok(x.iter()
        .enumerate()
        .all(|(i, &v)| v == 0.0 || partition.block_of(i) == block))
}

/// Whether the trajectory `x_0, …, x_n` of `d`-dimensional points is
/// coordinatewise non-decreasing, non-increasing, constant from `x_1` on,
/// or has a single jump: `x_0 = … = x_{m−1}` and `x_m = … = x_n` for some
/// `m ∈ {2, …, n}`.
pub fn monotone_trajectory_predicate(path: &[Vec<f64>]) -> Result<bool> {
    if path.len() < 2 {
        return Err(Error::InvalidArgument(
            "a trajectory needs at least x_0 and x_1".into(),
        ));
    }
    let d = path[0].len();
    if let Some(p) = path.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            what: "trajectory point",
            expected: d,
            found: p.len(),
        });
    }
    let le = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
    let eq = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x == y);
    let n = path.len() - 1;

    if path.windows(2).all(|w| le(&w[0], &w[1])) || path.windows(2).all(|w| le(&w[1], &w[0])) {
        return Ok(true);
    }
    if path[1..].windows(2).all(|w| eq(&w[0], &w[1])) {
        return Ok(true);
    }
    Ok((2..=n).any(|m| {
        path[..m].windows(2).all(|w| eq(&w[0], &w[1]))
            && path[m..].windows(2).all(|w| eq(&w[0], &w[1]))
    }))
}
