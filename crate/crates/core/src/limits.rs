//! Central limit theorem and invariance principle harness for stationary
//! Gaussian moving averages.
//!
//! For a strictly stationary sequence `X_1, X_2, …` of random vectors that is
//! weakly associated between blocks (each `X_j` one block, or finer), the
//! normalized partial sums `S_n / √n` converge to `N(0, Σ)` with the long-run
//! covariance `Σ`, and `S_[nt] / √n` converges to a Wiener process with
//! covariance matrix `Σ`. `Σ` may have negative entries.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{matrix_to_rows, CovarianceMatrix};
use crate::partition::BlockPartition;
use crate::rng::{SeedLineage, DEFAULT_SEED};
use crate::simulate::MaModel;
use crate::stats::{ks_test, normal_cdf, sample_covariance};
use crate::verdict::{Statistics, Status, Verdict, Witness};

/// Lag covariances below `-CERT_TOL` break the certificate.
pub const CERT_TOL: f64 = 1e-12;
/// Entrywise tolerance in standard errors.
pub const SE_MULTIPLIER: f64 = 6.0;
/// Projections used for the normality check.
pub const PROJECTIONS: usize = 10;
/// Every projection KS p-value must exceed this.
pub const KS_MIN_P: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRunCovariance {
    /// `Γ₀ + Σ_{h≥1} (Γ_h + Γ_hᵀ)`.
    pub sigma: CovarianceMatrix,
    /// `Γ₀ + 2 Σ_{h≥1} Γ_h`, the unsymmetrized sum.
    pub literal: Vec<Vec<f64>>,
    /// `max |sigma − literal|`; zero when every `Γ_h` is symmetric.
    pub max_discrepancy: f64,
    /// `Γ_h = E X_1 X_{1+h}ᵀ` for `h = 0..q`.
    pub autocovariances: Vec<Vec<Vec<f64>>>,
}

/// `Γ_h = Σ_{r=0}^{q−h} Θ_r C Θ_{r+h}ᵀ`, `h = 0..q`.
pub fn autocovariances(model: &MaModel) -> Vec<DMatrix<f64>> {
    let th = model.lag_matrices();
    let c = model.innovation().entries();
    let q = model.order();
    (0..=q)
        .map(|h| {
            (0..=q - h).fold(DMatrix::zeros(model.dim(), model.dim()), |acc, r| {
                acc + &th[r] * c * th[r + h].transpose()
            })
        })
        .collect()
}

pub fn longrun_covariance(model: &MaModel) -> Result<LongRunCovariance> {
    let gam = autocovariances(model);
    let mut sym = gam[0].clone();
    let mut lit = gam[0].clone();
    for g in &gam[1..] {
        sym += g + g.transpose();
        lit += g * 2.0;
    }
    let max_discrepancy = (&sym - &lit).amax();
    Ok(LongRunCovariance {
        sigma: CovarianceMatrix::new(sym)?,
        literal: matrix_to_rows(&lit),
        max_discrepancy,
        autocovariances: gam.iter().map(matrix_to_rows).collect(),
    })
}

/// Exact certificate of weak association between blocks for a Gaussian
/// MA model: every lag-`h ≥ 1` covariance and every cross-block lag-0
/// covariance under `partition` must be non-negative.
///
/// Witness indices refer to the stacked vector `(X_1, X_{1+h})`: `k ∈ 1..d`,
/// `l = h·d + l'`.
pub fn certify_weak_block_association(
    model: &MaModel,
    partition: &BlockPartition,
) -> Result<Verdict> {
    let d = model.dim();
    if partition.index_count() != d {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: d,
            found: partition.index_count(),
        });
    }
    let gam = autocovariances(model);
    let mut worst: Option<(usize, usize, usize, f64)> = None;
    let mut checked = 0;
    for (h, g) in gam.iter().enumerate() {
        for k in 0..d {
            for l in 0..d {
                if h == 0 && (k >= l || partition.same_block(k, l)) {
                    continue;
                }
                checked += 1;
                let v = g[(k, l)];
                if worst.is_none_or(|w| v < w.3) {
                    worst = Some((h, k, l, v));
                }
            }
        }
    }
    let failing = worst.filter(|w| w.3 < -CERT_TOL);
    let mut v = Verdict::new(
        "certify_weak_block_association",
        if failing.is_some() {
            Status::Violation
        } else {
            Status::Pass
        },
    );
    v.statistics = Statistics {
        checked,
        tolerance: Some(CERT_TOL),
        ..Statistics::default()
    };
    if let Some((h, k, l, val)) = failing {
        v.witness = Some(Witness::CovarianceEntry {
            k: k + 1,
            l: h * d + l + 1,
            value: val,
        });
        v = v.with_note(format!("negative covariance at lag {h}"));
    }
    Ok(v.with_note("Gaussian innovations: non-negative cross-block covariances characterize weak association between blocks"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CltConfig {
    /// Path length `n`.
    pub n: usize,
    /// Replications `R`.
    pub reps: usize,
    pub seed: u64,
    /// Run even when the certificate fails; the report is marked exploratory.
    pub override_hypothesis: bool,
    /// Block structure within each vector for the certificate (default: one block).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<BlockPartition>,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            reps: 2000,
            seed: DEFAULT_SEED,
            override_hypothesis: false,
            partition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub model: MaModel,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub hypothesis: Verdict,
    /// Set when the certificate failed and the run was overridden.
    pub exploratory: bool,
    pub theoretical: Vec<Vec<f64>>,
    pub literal: Vec<Vec<f64>>,
    pub literal_discrepancy: f64,
    pub empirical: Vec<Vec<f64>>,
    /// `SE_MULTIPLIER · √((Σ_kk Σ_ll + Σ_kl²) / R)`.
    pub tolerance: Vec<Vec<f64>>,
    pub max_abs_deviation: f64,
    /// `max |empirical − Σ| / tolerance`; at most 1 when the covariance check passes.
    pub max_deviation_ratio: f64,
    pub projections: Vec<Vec<f64>>,
    pub projection_p_values: Vec<f64>,
    pub covariance_pass: bool,
    pub normality_pass: bool,
    pub pass: bool,
    /// The limit covariance has a negative entry.
    pub has_negative_entry: bool,
    pub lineage: SeedLineage,
}

impl CltReport {
    pub fn status(&self) -> Status {
        if self.pass {
            Status::Pass
        } else {
            Status::Violation
        }
    }
}

fn check_hypothesis(
    model: &MaModel,
    partition: Option<&BlockPartition>,
    override_hypothesis: bool,
) -> Result<(Verdict, bool)> {
    let whole = BlockPartition::whole(model.dim());
    let v = certify_weak_block_association(model, partition.unwrap_or(&whole))?;
    if v.is_pass() {
        return Ok((v, false));
    }
    if override_hypothesis {
        return Ok((v, true));
    }
    Err(Error::HypothesisNotCertified(
        "weak association between blocks is not certified for this model; pass the override flag to run an exploratory experiment".into(),
    ))
}

/// Simulates each replication once and records `S_k / √n` at `checkpoints`
/// (sorted step counts, last = n). Returns `reps × checkpoints × d`.
fn partial_sums(
    model: &MaModel,
    n: usize,
    reps: usize,
    checkpoints: &[usize],
    root: SeedLineage,
) -> Vec<f64> {
    let d = model.dim();
    let w = checkpoints.len() * d;
    let mut out = vec![0.0; reps * w];
    let scale = 1.0 / (n as f64).sqrt();
    out.par_chunks_mut(w).enumerate().for_each(|(r, slot)| {
        let mut rng = root.derive("rep", r as u64).rng();
        model.with_path(&mut rng, |path, rng| {
            let mut s = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut next = 0;
            for step in 1..=n {
                path.next_into(rng, &mut x);
                for (a, b) in s.iter_mut().zip(&x) {
                    *a += b;
                }
                while next < checkpoints.len() && checkpoints[next] == step {
                    for k in 0..d {
                        slot[next * d + k] = s[k] * scale;
                    }
                    next += 1;
                }
            }
        });
    });
    out
}

fn validate_sizes(n: usize, reps: usize, model: &MaModel) -> Result<()> {
    if n <= model.order() || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must exceed the MA order {}",
            model.order()
        )));
    }
    if reps < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: reps,
        });
    }
    Ok(())
}

fn unit_direction(lineage: SeedLineage, d: usize) -> Vec<f64> {
    let mut rng = lineage.rng();
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn run_clt_experiment(model: &MaModel, cfg: &CltConfig) -> Result<CltReport> {
    validate_sizes(cfg.n, cfg.reps, model)?;
    let (hypothesis, exploratory) =
        check_hypothesis(model, cfg.partition.as_ref(), cfg.override_hypothesis)?;
    let lr = longrun_covariance(model)?;
    let sigma = lr.sigma.entries();
    let d = model.dim();
    let root = SeedLineage::new(cfg.seed).derive("clt", 0);
    let sums = partial_sums(model, cfg.n, cfg.reps, &[cfg.n], root);
    let emp = sample_covariance(&sums, d);
    let r = cfg.reps as f64;
    let mut tol = vec![vec![0.0; d]; d];
    let mut max_dev: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for k in 0..d {
        for l in 0..d {
            let se = ((sigma[(k, k)] * sigma[(l, l)] + sigma[(k, l)].powi(2)) / r).sqrt();
            tol[k][l] = SE_MULTIPLIER * se;
            let dev = (emp[k][l] - sigma[(k, l)]).abs();
            max_dev = max_dev.max(dev);
            max_ratio = max_ratio.max(if tol[k][l] > 0.0 {
                dev / tol[k][l]
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            });
        }
    }
    let covariance_pass = max_ratio <= 1.0;
    let mut projections = Vec::with_capacity(PROJECTIONS);
    let mut p_values = Vec::with_capacity(PROJECTIONS);
    for j in 0..PROJECTIONS {
        let a = unit_direction(root.derive("projection", j as u64), d);
        let var = lr.sigma.quadratic_form(&a);
        if var > 0.0 {
            let sd = var.sqrt();
            let ys: Vec<f64> = sums
                .chunks_exact(d)
                .map(|s| crate::levy::dot(&a, s) / sd)
                .collect();
            p_values.push(ks_test(&ys, normal_cdf).1);
        }
        projections.push(a);
    }
    let normality_pass = p_values.iter().all(|&p| p > KS_MIN_P);
    Ok(CltReport {
        model: model.clone(),
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        hypothesis,
        exploratory,
        theoretical: lr.sigma.to_rows(),
        literal: lr.literal,
        literal_discrepancy: lr.max_discrepancy,
        empirical: emp,
        tolerance: tol,
        max_abs_deviation: max_dev,
        max_deviation_ratio: max_ratio,
        projections,
        projection_p_values: p_values,
        covariance_pass,
        normality_pass,
        pass: covariance_pass && normality_pass,
        has_negative_entry: (0..d).any(|k| (0..d).any(|l| sigma[(k, l)] < 0.0)),
        lineage: root,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvarianceConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Times in `(0, 1]`.
    pub times: Vec<f64>,
    pub override_hypothesis: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<BlockPartition>,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            reps: 2000,
            seed: DEFAULT_SEED,
            times: vec![0.25, 0.5, 1.0],
            override_hypothesis: false,
            partition: None,
        }
    }
}

/// One compared entry. `k`, `l` are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceEntry {
    pub s: f64,
    pub t: f64,
    pub k: usize,
    pub l: usize,
    pub expected: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub model: MaModel,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub hypothesis: Verdict,
    pub exploratory: bool,
    pub theoretical: Vec<Vec<f64>>,
    /// `Cov(Y_n(s)_k, Y_n(t)_l)` against `min(s,t) Σ_kl` for `s ≤ t`.
    pub cross_covariances: Vec<InvarianceEntry>,
    /// `Cov(Y_n(t)_k − Y_n(s)_k, Y_n(s)_l)` against 0 for `s < t`.
    pub increment_vs_past: Vec<InvarianceEntry>,
    pub pass: bool,
    pub lineage: SeedLineage,
}

impl InvarianceReport {
    pub fn status(&self) -> Status {
        if self.pass {
            Status::Pass
        } else {
            Status::Violation
        }
    }
}

fn cov_from(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0)
}

/// Compares `Y_n(t) = S_[nt] / √n` with a Wiener process of covariance `Σ`.
pub fn run_invariance_check(model: &MaModel, cfg: &InvarianceConfig) -> Result<InvarianceReport> {
    validate_sizes(cfg.n, cfg.reps, model)?;
    if cfg.times.is_empty() || cfg.times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidArgument(
            "times must be non-empty and lie in (0, 1]".into(),
        ));
    }
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let steps: Vec<usize> = times
        .iter()
        .map(|t| (cfg.n as f64 * t).floor() as usize)
        .collect();
    if steps.contains(&0) {
        return Err(Error::InvalidArgument(
            "every time must cover at least one step".into(),
        ));
    }
    let (hypothesis, exploratory) =
        check_hypothesis(model, cfg.partition.as_ref(), cfg.override_hypothesis)?;
    let lr = longrun_covariance(model)?;
    let sigma = lr.sigma.entries();
    let d = model.dim();
    let m = times.len();
    let root = SeedLineage::new(cfg.seed).derive("invariance", 0);
    let sums = partial_sums(model, cfg.n, cfg.reps, &steps, root);
    let w = m * d;
    let col =
        |ti: usize, k: usize| -> Vec<f64> { sums.chunks_exact(w).map(|r| r[ti * d + k]).collect() };
    let r = cfg.reps as f64;
    let mut cross = Vec::new();
    let mut incr = Vec::new();
    for si in 0..m {
        for ti in si..m {
            let (s, t) = (times[si], times[ti]);
            for k in 0..d {
                let ys = col(si, k);
                for l in 0..d {
                    let yt = col(ti, l);
                    let expected = s.min(t) * sigma[(k, l)];
                    let se =
                        ((s * sigma[(k, k)] * t * sigma[(l, l)] + expected * expected) / r).sqrt();
                    let empirical = cov_from(&ys, &yt);
                    cross.push(InvarianceEntry {
                        s,
                        t,
                        k: k + 1,
                        l: l + 1,
                        expected,
                        empirical,
                        standard_error: se,
                        pass: (empirical - expected).abs() <= SE_MULTIPLIER * se,
                    });
                }
            }
            if si == ti {
                continue;
            }
            for k in 0..d {
                let inc: Vec<f64> = col(ti, k)
                    .iter()
                    .zip(col(si, k))
                    .map(|(a, b)| a - b)
                    .collect();
                for l in 0..d {
                    let past = col(si, l);
                    let se = ((t - s) * sigma[(k, k)] * s * sigma[(l, l)] / r).sqrt();
                    let empirical = cov_from(&inc, &past);
                    incr.push(InvarianceEntry {
                        s,
                        t,
                        k: k + 1,
                        l: l + 1,
                        expected: 0.0,
                        empirical,
                        standard_error: se,
                        pass: empirical.abs() <= SE_MULTIPLIER * se,
                    });
                }
            }
        }
    }
    let pass = cross.iter().chain(&incr).all(|e| e.pass);
    Ok(InvarianceReport {
        model: model.clone(),
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        times,
        hypothesis,
        exploratory,
        theoretical: lr.sigma.to_rows(),
        cross_covariances: cross,
        increment_vs_past: incr,
        pass,
        lineage: root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::matrix_from_rows;

    fn ma1(theta: &[Vec<f64>]) -> MaModel {
        MaModel::new(
            CovarianceMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap(),
            vec![matrix_from_rows(theta).unwrap()],
        )
        .unwrap()
    }

    fn certified() -> MaModel {
        ma1(&[vec![0.5, 0.25], vec![0.25, 0.5]])
    }

    #[test]
    fn iid_longrun_is_innovation() {
        let c = CovarianceMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let lr = longrun_covariance(&MaModel::iid(c.clone())).unwrap();
        assert_eq!(lr.sigma, c);
        assert_eq!(lr.max_discrepancy, 0.0);
    }

    #[test]
    fn certified_ma1_longrun_and_lag_one() {
        let lr = longrun_covariance(&certified()).unwrap();
        let want = [[1.9375, -0.40625], [-0.40625, 1.9375]];
        for k in 0..2 {
            for l in 0..2 {
                assert!((lr.sigma.get(k, l) - want[k][l]).abs() < 1e-14);
            }
        }
        assert_eq!(
            lr.autocovariances[1],
            vec![vec![0.375, 0.0], vec![0.0, 0.375]]
        );
        assert!((lr.autocovariances[0][0][1] + 0.40625).abs() < 1e-15);
    }

    #[test]
    fn certificate_examples() {
        let p = BlockPartition::whole(2);
        assert!(certify_weak_block_association(&certified(), &p)
            .unwrap()
            .is_pass());
        let bad = ma1(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let v = certify_weak_block_association(&bad, &p).unwrap();
        assert_eq!(v.status, Status::Violation);
        assert_eq!(
            v.witness,
            Some(Witness::CovarianceEntry {
                k: 1,
                l: 4,
                value: -0.25
            })
        );
        let iid =
            MaModel::iid(CovarianceMatrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]]).unwrap());
        assert!(certify_weak_block_association(&iid, &p).unwrap().is_pass());
        // finer blocks expose the within-vector negative entry
        assert!(
            !certify_weak_block_association(&iid, &BlockPartition::singletons(2))
                .unwrap()
                .is_pass()
        );
    }

    #[test]
    fn uncertified_model_needs_override() {
        let bad = ma1(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let cfg = CltConfig {
            n: 50,
            reps: 50,
            ..CltConfig::default()
        };
        assert!(matches!(
            run_clt_experiment(&bad, &cfg),
            Err(Error::HypothesisNotCertified(_))
        ));
        let r = run_clt_experiment(
            &bad,
            &CltConfig {
                override_hypothesis: true,
                ..cfg
            },
        )
        .unwrap();
        assert!(r.exploratory);
    }

    #[test]
    fn small_clt_runs_are_deterministic() {
        let cfg = CltConfig {
            n: 200,
            reps: 300,
            ..CltConfig::default()
        };
        let a = run_clt_experiment(&certified(), &cfg).unwrap();
        let b = run_clt_experiment(&certified(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.has_negative_entry);
        assert_eq!(a.projection_p_values.len(), PROJECTIONS);
    }

    #[test]
    fn invariance_rejects_bad_times() {
        let cfg = InvarianceConfig {
            n: 100,
            reps: 10,
            times: vec![0.0, 1.0],
            ..InvarianceConfig::default()
        };
        assert!(run_invariance_check(&certified(), &cfg).is_err());
    }
}
