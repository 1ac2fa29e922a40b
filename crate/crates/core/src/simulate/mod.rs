//! Seed-deterministic samplers.
//!
//! Every sampler takes a [`SeedLineage`]; identical lineage and parameters
//! reproduce identical bits regardless of the rayon pool size.

mod batch;
mod ma;
mod source;

pub use batch::{SampleBatch, CHUNK_ROWS};
pub use ma::{sample_stationary_ma, MaModel, MaPath, SequenceBatch};
pub use source::{Sampler, SourceSpec};

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::covfun::{increments_covariance, CovFunction, TimeGrid};
use crate::discrete::DiscreteJointDistribution;
use crate::error::{Error, Result};
use crate::levy::{DiscreteLevyMeasure, IdTriplet};
use crate::matrix::CovarianceMatrix;
use crate::rng::{SeedLineage, StreamRng};

/// `x ↦ mean + L z` with `z` standard normal.
#[derive(Debug, Clone)]
pub(crate) struct GaussianDraw {
    factor: DMatrix<f64>,
    z: usize,
}

impl GaussianDraw {
    pub(crate) fn new(sigma: &CovarianceMatrix) -> Self {
        let factor = sigma.factor();
        let z = factor.ncols();
        Self { factor, z }
    }

    /// Adds `L z` to `out`, consuming exactly `dim` normals.
    pub(crate) fn add_into(&self, rng: &mut StreamRng, out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend((0..self.z).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.add_factor_times(scratch, 1.0, out);
    }

    /// `out += scale · L z`.
    pub(crate) fn add_factor_times(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate() {
                acc += self.factor[(i, j)] * zj;
            }
            *o += scale * acc;
        }
    }

    pub(crate) fn normals(&self) -> usize {
        self.z
    }
}

/// Jump sampler for a finite discrete Lévy measure.
#[derive(Debug, Clone)]
pub(crate) struct JumpDraw {
    locations: Vec<Vec<f64>>,
    pick: Option<WeightedIndex<f64>>,
}

impl JumpDraw {
    pub(crate) fn new(nu: &DiscreteLevyMeasure) -> Self {
        let pick = if nu.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(nu.atoms().iter().map(|a| a.mass)).expect("positive masses"))
        };
        Self {
            locations: nu.atoms().iter().map(|a| a.location.clone()).collect(),
            pick,
        }
    }

    /// Adds `count` i.i.d. jumps to each of `targets`.
    pub(crate) fn add_jumps(&self, rng: &mut StreamRng, count: u64, targets: &mut [&mut [f64]]) {
        let Some(pick) = &self.pick else { return };
        for _ in 0..count {
            let u = &self.locations[pick.sample(rng)];
            for t in targets.iter_mut() {
                for (o, v) in t.iter_mut().zip(u) {
                    *o += v;
                }
            }
        }
    }
}

pub(crate) fn poisson_count(rng: &mut StreamRng, dist: &Option<Poisson<f64>>) -> u64 {
    match dist {
        Some(p) => p.sample(rng) as u64,
        None => 0,
    }
}

pub(crate) fn poisson(rate: f64) -> Option<Poisson<f64>> {
    (rate > 0.0).then(|| Poisson::new(rate).expect("finite positive rate"))
}

/// I.i.d. centered Gaussian rows with covariance `Σ`.
pub fn sample_gaussian_vector(
    sigma: &CovarianceMatrix,
    count: usize,
    lineage: SeedLineage,
) -> SampleBatch {
    let g = GaussianDraw::new(sigma);
    SampleBatch::generate(sigma.dim(), count, lineage, |rng, row| {
        let mut z = Vec::with_capacity(g.normals());
        g.add_into(rng, row, &mut z);
    })
}

/// Rows `(ΔX_1, …, ΔX_n)` of a centered Gaussian process with covariance
/// function `K` on the grid, stacked blockwise (row index `(i−1)·d + k`).
pub fn sample_gaussian_increments(
    cov: &CovFunction,
    grid: &TimeGrid,
    count: usize,
    lineage: SeedLineage,
) -> Result<SampleBatch> {
    let sigma = increments_covariance(cov, grid)?;
    Ok(sample_gaussian_vector(&sigma, count, lineage))
}

/// Rows of `X ~ ID(a, Σ, ν)` with finite `ν`: `a + N(0, Σ) + Σ_{j≤N} J_j`,
/// `N ~ Poisson(ν(R^d))`, `J_j ~ ν / ν(R^d)`.
pub fn sample_compound_poisson_id(
    triplet: &IdTriplet,
    count: usize,
    lineage: SeedLineage,
) -> SampleBatch {
    let g = GaussianDraw::new(triplet.gaussian());
    let jumps = JumpDraw::new(triplet.levy());
    let rate = poisson(triplet.levy().total_mass());
    let drift = triplet.drift().to_vec();
    SampleBatch::generate(triplet.dim(), count, lineage, |rng, row| {
        row.copy_from_slice(&drift);
        let mut z = Vec::with_capacity(g.normals());
        g.add_into(rng, row, &mut z);
        let n = poisson_count(rng, &rate);
        jumps.add_jumps(rng, n, &mut [row]);
    })
}

/// Rows `(Y^α, Z^α)` of the interpolated pair with characteristic function
/// `φ(r)^{1−α} φ(s)^{1−α} φ(r+s)^α`, realized as the triplet on the doubled
/// space with Gaussian part `[[Σ, αΣ], [αΣ, Σ]]`, Lévy measure
/// `(1−α)(ν⊗δ₀ + δ₀⊗ν) + α·ν∘(u ↦ (u,u))⁻¹` and drift `(a, a)`.
///
/// The Gaussian part is drawn as `Y = L z₁`, `Z = α L z₁ + √(1−α²) L z₂`, so
/// `α = 1` gives `Y = Z` exactly.
pub fn sample_hps_pair(
    triplet: &IdTriplet,
    alpha: f64,
    count: usize,
    lineage: SeedLineage,
) -> Result<SampleBatch> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0,1], got {alpha}"
        )));
    }
    let d = triplet.dim();
    let g = GaussianDraw::new(triplet.gaussian());
    let jumps = JumpDraw::new(triplet.levy());
    let lambda = triplet.levy().total_mass();
    let own = poisson((1.0 - alpha) * lambda);
    let shared = poisson(alpha * lambda);
    let coupling = (1.0 - alpha * alpha).max(0.0).sqrt();
    let drift = triplet.drift().to_vec();
    Ok(SampleBatch::generate(2 * d, count, lineage, |rng, row| {
        let (y, z) = row.split_at_mut(d);
        y.copy_from_slice(&drift);
        z.copy_from_slice(&drift);
        let z1: Vec<f64> = (0..g.normals())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let z2: Vec<f64> = (0..g.normals())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        g.add_factor_times(&z1, 1.0, y);
        let mut gz = vec![0.0; d];
        g.add_factor_times(&z1, alpha, &mut gz);
        g.add_factor_times(&z2, coupling, &mut gz);
        for (o, v) in z.iter_mut().zip(&gz) {
            *o += v;
        }
        let ny = poisson_count(rng, &own);
        let nz = poisson_count(rng, &own);
        let ns = poisson_count(rng, &shared);
        jumps.add_jumps(rng, ny, &mut [&mut *y]);
        jumps.add_jumps(rng, nz, &mut [&mut *z]);
        jumps.add_jumps(rng, ns, &mut [y, z]);
    }))
}

/// I.i.d. rows from a finite joint law.
pub fn sample_discrete(
    dist: &DiscreteJointDistribution,
    count: usize,
    lineage: SeedLineage,
) -> SampleBatch {
    let pick = WeightedIndex::new(dist.probs().iter().copied()).expect("probabilities sum to one");
    SampleBatch::generate(dist.dim(), count, lineage, |rng, row| {
        row.copy_from_slice(&dist.support()[pick.sample(rng)]);
    })
}
