use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::dot;
use crate::rng::{SeedLineage, StreamRng};

/// Coordinatewise non-decreasing function `R^dim → R`, tagged by `"form"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum MonotoneFunction {
    /// `1{⟨w,x⟩ > c}` with `w ≥ 0`.
    HalfSpace { weights: Vec<f64>, threshold: f64 },
    /// `max_k (x_k − b_k)`.
    ShiftedMax { shifts: Vec<f64> },
    /// `⟨w,x⟩` with `w ≥ 0`.
    Linear { weights: Vec<f64> },
    /// Sum of the terms; all terms share one dimension.
    Sum { terms: Vec<MonotoneFunction> },
}

/// Named generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionFamily {
    /// A single half-space indicator.
    Indicator,
    /// Three half-space indicators sharing a direction: a 4-valued step function.
    IndicatorSum,
    ShiftedMax,
    Linear,
}

impl FunctionFamily {
    pub fn is_bounded(self) -> bool {
        matches!(
            self,
            FunctionFamily::Indicator | FunctionFamily::IndicatorSum
        )
    }
}

impl MonotoneFunction {
    pub fn dim(&self) -> usize {
        match self {
            MonotoneFunction::HalfSpace { weights, .. } | MonotoneFunction::Linear { weights } => {
                weights.len()
            }
            MonotoneFunction::ShiftedMax { shifts } => shifts.len(),
            MonotoneFunction::Sum { terms } => terms.first().map_or(0, MonotoneFunction::dim),
        }
    }

    /// Checks finiteness, non-negative weights and consistent dimensions.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("monotone function: {m}")));
        match self {
            MonotoneFunction::HalfSpace { weights, threshold } => {
                if !threshold.is_finite() {
                    return bad("non-finite threshold");
                }
                check_weights(weights)
            }
            MonotoneFunction::Linear { weights } => check_weights(weights),
            MonotoneFunction::ShiftedMax { shifts } => {
                if shifts.is_empty() {
                    return bad("shifted max needs at least one coordinate");
                }
                if shifts.iter().any(|b| !b.is_finite()) {
                    return bad("non-finite shift");
                }
                Ok(())
            }
            MonotoneFunction::Sum { terms } => {
                let d = self.dim();
                for t in terms {
                    t.validate()?;
                    if t.dim() != d {
                        return Err(Error::DimensionMismatch {
                            what: "sum term",
                            expected: d,
                            found: t.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MonotoneFunction::HalfSpace { weights, threshold } => {
                if dot(weights, x) > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            MonotoneFunction::ShiftedMax { shifts } => x
                .iter()
                .zip(shifts)
                .map(|(v, b)| v - b)
                .fold(f64::NEG_INFINITY, f64::max),
            MonotoneFunction::Linear { weights } => dot(weights, x),
            MonotoneFunction::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Column-oriented evaluation: `out[i] = f(cols[0][i], …, cols[d−1][i])`.
    /// Agrees with [`eval`](Self::eval) on every row.
    pub fn eval_columns(&self, cols: &[&[f64]], out: &mut [f64]) {
        self.eval_columns_buf(cols, out, &mut Vec::new());
    }

    /// As [`eval_columns`](Self::eval_columns); `buf` is scratch space for sums.
    pub fn eval_columns_buf(&self, cols: &[&[f64]], out: &mut [f64], buf: &mut Vec<f64>) {
        match self {
            MonotoneFunction::HalfSpace { weights, threshold } => {
                weighted_sum(weights, cols, out);
                for v in out.iter_mut() {
                    *v = if *v > *threshold { 1.0 } else { 0.0 };
                }
            }
            MonotoneFunction::Linear { weights } => weighted_sum(weights, cols, out),
            MonotoneFunction::ShiftedMax { shifts } => {
                out.fill(f64::NEG_INFINITY);
                for (c, b) in cols.iter().zip(shifts) {
                    for (o, v) in out.iter_mut().zip(c.iter()) {
                        *o = o.max(v - b);
                    }
                }
            }
            MonotoneFunction::Sum { terms } => {
                out.fill(0.0);
                buf.resize(out.len(), 0.0);
                for t in terms {
                    // nested sums get their own scratch
                    t.eval_columns_buf(cols, buf, &mut Vec::new());
                    for (o, v) in out.iter_mut().zip(buf.iter()) {
                        *o += v;
                    }
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            MonotoneFunction::HalfSpace { .. } => true,
            MonotoneFunction::ShiftedMax { .. } => false,
            MonotoneFunction::Linear { weights } => weights.iter().all(|&w| w == 0.0),
            MonotoneFunction::Sum { terms } => terms.iter().all(MonotoneFunction::is_bounded),
        }
    }

    /// Samples `pairs` dominated pairs `x ≤ y` and checks `f(x) ≤ f(y)`.
    /// Returns the first offending pair.
    pub fn check_monotone(
        &self,
        pairs: usize,
        lineage: SeedLineage,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        let mut rng = lineage.rng();
        for _ in 0..pairs {
            let x: Vec<f64> = (0..d)
                .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&v| {
                    if rng.random_bool(0.3) {
                        v
                    } else {
                        v + rng.sample::<f64, _>(Exp1)
                    }
                })
                .collect();
            if self.eval(&x) > self.eval(&y) {
                return Some((x, y));
            }
        }
        None
    }
}

/// `out = Σ_k w_k cols[k]`, accumulated in coordinate order like `dot`.
/// Zero weights are skipped; they add exactly zero for finite data.
fn weighted_sum(w: &[f64], cols: &[&[f64]], out: &mut [f64]) {
    out.fill(0.0);
    for (c, &wk) in cols.iter().zip(w) {
        if wk == 0.0 {
            continue;
        }
        if wk == 1.0 {
            for (o, v) in out.iter_mut().zip(c.iter()) {
                *o += v;
            }
        } else {
            for (o, v) in out.iter_mut().zip(c.iter()) {
                *o += wk * v;
            }
        }
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "monotone function weights must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Sparse non-negative direction: with probability `single`, a unit vector on
/// one coordinate of `allowed`; otherwise exponential weights on a random
/// non-empty subset of `allowed`. Coordinates outside `allowed` get 0.
pub(crate) fn sparse_weights(
    rng: &mut StreamRng,
    dim: usize,
    allowed: &[usize],
    single: f64,
) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    if allowed.is_empty() {
        return w;
    }
    if allowed.len() == 1 || rng.random_bool(single) {
        w[allowed[rng.random_range(0..allowed.len())]] = 1.0;
        return w;
    }
    loop {
        for &k in allowed {
            if rng.random_bool(0.5) {
                w[k] = rng.sample::<f64, _>(Exp1);
            }
        }
        if w.iter().any(|&v| v > 0.0) {
            return w;
        }
    }
}

/// Draws a function from `family` on `R^dim`. Thresholds and shifts are
/// standard normal scaled by the weight norm.
pub fn gen_monotone_function(dim: usize, family: FunctionFamily, seed: u64) -> MonotoneFunction {
    let mut rng = SeedLineage::new(seed).derive("monotone-function", 0).rng();
    let all: Vec<usize> = (0..dim).collect();
    let w = sparse_weights(&mut rng, dim, &all, 0.5);
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut c = || norm * rng.sample::<f64, _>(StandardNormal);
    match family {
        FunctionFamily::Indicator => MonotoneFunction::HalfSpace {
            weights: w,
            threshold: c(),
        },
        FunctionFamily::IndicatorSum => {
            let mut cs = [c(), c(), c()];
            cs.sort_by(f64::total_cmp);
            MonotoneFunction::Sum {
                terms: cs
                    .iter()
                    .map(|&t| MonotoneFunction::HalfSpace {
                        weights: w.clone(),
                        threshold: t,
                    })
                    .collect(),
            }
        }
        FunctionFamily::Linear => MonotoneFunction::Linear { weights: w },
        FunctionFamily::ShiftedMax => MonotoneFunction::ShiftedMax {
            shifts: (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_space_example() {
        let f = MonotoneFunction::HalfSpace {
            weights: vec![1.0, 0.0],
            threshold: 0.0,
        };
        assert_eq!(f.eval(&[0.5, -9.0]), 1.0);
        assert_eq!(f.eval(&[0.0, 9.0]), 0.0);
        assert!(f.is_bounded());
    }

    #[test]
    fn indicator_sum_has_four_levels() {
        let f = gen_monotone_function(2, FunctionFamily::IndicatorSum, 3);
        let MonotoneFunction::Sum { terms } = &f else {
            panic!()
        };
        assert_eq!(terms.len(), 3);
        let mut levels: Vec<f64> = (-400..400)
            .map(|i| f.eval(&[i as f64 / 20.0, i as f64 / 20.0]))
            .collect();
        levels.dedup();
        assert_eq!(levels, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_weights_give_constant() {
        let f = MonotoneFunction::Linear {
            weights: vec![0.0; 3],
        };
        assert!(f.is_bounded());
        assert_eq!(f.eval(&[1.0, -2.0, 3.0]), 0.0);
    }

    #[test]
    fn generated_functions_are_monotone() {
        for seed in 0..50 {
            for fam in [
                FunctionFamily::Indicator,
                FunctionFamily::IndicatorSum,
                FunctionFamily::Linear,
                FunctionFamily::ShiftedMax,
            ] {
                let f = gen_monotone_function(1 + seed as usize % 5, fam, seed);
                f.validate().unwrap();
                assert_eq!(f.check_monotone(1000, SeedLineage::new(seed)), None);
            }
        }
    }

    #[test]
    fn negative_weight_is_rejected_and_detected() {
        let f = MonotoneFunction::Linear {
            weights: vec![1.0, -1.0],
        };
        assert!(f.validate().is_err());
        assert!(f.check_monotone(1000, SeedLineage::new(0)).is_some());
    }

    #[test]
    fn column_evaluation_matches_rows() {
        for seed in 0..40 {
            for fam in [
                FunctionFamily::Indicator,
                FunctionFamily::IndicatorSum,
                FunctionFamily::Linear,
                FunctionFamily::ShiftedMax,
            ] {
                let d = 1 + seed as usize % 4;
                let f = gen_monotone_function(d, fam, seed);
                let mut rng = SeedLineage::new(seed).rng();
                let cols: Vec<Vec<f64>> = (0..d)
                    .map(|_| {
                        (0..50)
                            .map(|_| rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    })
                    .collect();
                let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
                let mut out = vec![0.0; 50];
                f.eval_columns(&refs, &mut out);
                for i in 0..50 {
                    let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                    assert_eq!(out[i], f.eval(&row));
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let f = MonotoneFunction::HalfSpace {
            weights: vec![1.0],
            threshold: 0.5,
        };
        let j = serde_json::to_value(&f).unwrap();
        assert_eq!(j["form"], "half-space");
        let back: MonotoneFunction = serde_json::from_value(j).unwrap();
        assert_eq!(back, f);
    }
}
