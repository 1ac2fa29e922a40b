use serde::{Deserialize, Serialize};

use super::{
    sample_compound_poisson_id, sample_discrete, sample_gaussian_increments,
    sample_gaussian_vector, sample_stationary_ma, MaModel, SampleBatch,
};
use crate::covfun::{CovFunction, CovFunctionSpec, TimeGrid};
use crate::discrete::DiscreteJointDistribution;
use crate::error::{Error, Result};
use crate::levy::IdTriplet;
use crate::matrix::CovarianceMatrix;
use crate::rng::SeedLineage;

/// Anything that produces i.i.d. rows of a fixed dimension.
pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch>;
    /// Whether unbounded (linear) test functions have finite covariance.
    fn finite_second_moments(&self) -> bool;
}

/// Declarative description of a sampling source, tagged by `"kind"`.
///
/// * `gaussian`: `{"sigma": [[..]]}`
/// * `triplet`: `{"triplet": {"drift", "sigma", "levy"}}`
/// * `increments`: `{"covfun": {"family", "params"}, "grid": [0, ..]}`
/// * `discrete`: `{"dist": {"support", "probs"}}`
/// * `ma`: `{"model": {"innovation", "theta"}, "length": L}`; each row is a
///   whole path `(X_1, …, X_L)` flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceSpec {
    Gaussian {
        sigma: CovarianceMatrix,
    },
    Triplet {
        triplet: IdTriplet,
    },
    Increments {
        covfun: CovFunctionSpec,
        grid: TimeGrid,
    },
    Discrete {
        dist: DiscreteJointDistribution,
    },
    Ma {
        model: MaModel,
        length: usize,
    },
}

impl SourceSpec {
    /// Built-in sources by name.
    ///
    /// `brownian-antithetic`: `Y_t = (Z_t, −Z_t)` for a standard Brownian
    /// motion `Z`, observed through its increments on the grid `(0, 1, 2)`;
    /// rows are `(ΔY¹₁, ΔY²₁, ΔY¹₂, ΔY²₂)`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "brownian-antithetic" => {
                let spec: CovFunctionSpec = serde_json::from_value(serde_json::json!({
                    "family": "brownian-min",
                    "params": {"coef": [[1.0, -1.0], [-1.0, 1.0]]}
                }))
                .expect("static preset");
                Some(SourceSpec::Increments {
                    covfun: spec,
                    grid: TimeGrid::new(vec![0.0, 1.0, 2.0]).expect("static grid"),
                })
            }
            _ => None,
        }
    }

    pub const PRESETS: &'static [&'static str] = &["brownian-antithetic"];

    pub fn build(&self) -> Result<Box<dyn Sampler>> {
        Ok(match self {
            SourceSpec::Gaussian { sigma } => Box::new(GaussianSource(sigma.clone())),
            SourceSpec::Triplet { triplet } => Box::new(TripletSource(triplet.clone())),
            SourceSpec::Increments { covfun, grid } => {
                let cov = CovFunction::from_spec(covfun.clone())?;
                // validates the PSD invariant up front
                crate::covfun::increments_covariance(&cov, grid)?;
                Box::new(IncrementSource {
                    cov,
                    grid: grid.clone(),
                })
            }
            SourceSpec::Discrete { dist } => Box::new(DiscreteSource(dist.clone())),
            SourceSpec::Ma { model, length } => {
                if *length <= model.order() {
                    return Err(Error::InvalidArgument(format!(
                        "path length {length} must exceed the MA order {}",
                        model.order()
                    )));
                }
                Box::new(MaSource {
                    model: model.clone(),
                    length: *length,
                })
            }
        })
    }
}

struct GaussianSource(CovarianceMatrix);

impl Sampler for GaussianSource {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch> {
        Ok(sample_gaussian_vector(&self.0, count, lineage))
    }
    fn finite_second_moments(&self) -> bool {
        true
    }
}

struct TripletSource(IdTriplet);

impl Sampler for TripletSource {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch> {
        Ok(sample_compound_poisson_id(&self.0, count, lineage))
    }
    fn finite_second_moments(&self) -> bool {
        // finite discrete ν has moments of every order
        true
    }
}

struct IncrementSource {
    cov: CovFunction,
    grid: TimeGrid,
}

impl Sampler for IncrementSource {
    fn dim(&self) -> usize {
        self.cov.dim() * self.grid.intervals()
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch> {
        sample_gaussian_increments(&self.cov, &self.grid, count, lineage)
    }
    fn finite_second_moments(&self) -> bool {
        true
    }
}

struct DiscreteSource(DiscreteJointDistribution);

impl Sampler for DiscreteSource {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch> {
        Ok(sample_discrete(&self.0, count, lineage))
    }
    fn finite_second_moments(&self) -> bool {
        true
    }
}

struct MaSource {
    model: MaModel,
    length: usize,
}

impl Sampler for MaSource {
    fn dim(&self) -> usize {
        self.model.dim() * self.length
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> Result<SampleBatch> {
        Ok(sample_stationary_ma(&self.model, self.length, count, lineage)?.into_rows())
    }
    fn finite_second_moments(&self) -> bool {
        true
    }
}

/// A fixed batch used as a sampler: requests are served from its first rows.
impl Sampler for SampleBatch {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample(&self, count: usize, _lineage: SeedLineage) -> Result<SampleBatch> {
        if count > self.count {
            return Err(Error::InsufficientSamples {
                needed: count,
                got: self.count,
            });
        }
        Ok(SampleBatch {
            dim: self.dim,
            count,
            data: self.data[..count * self.dim].to_vec(),
            lineage: self.lineage,
        })
    }
    fn finite_second_moments(&self) -> bool {
        // empirical laws have bounded support
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antithetic_preset_is_rank_two() {
        let src = SourceSpec::preset("brownian-antithetic")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(src.dim(), 4);
        let b = src.sample(100, SeedLineage::new(42)).unwrap();
        for r in b.rows() {
            assert!((r[0] + r[1]).abs() < 1e-12);
            assert!((r[2] + r[3]).abs() < 1e-12);
        }
    }

    #[test]
    fn source_json_round_trip() {
        let s = SourceSpec::preset("brownian-antithetic").unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"kind\":\"increments\""));
        let back: SourceSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let g: SourceSpec =
            serde_json::from_str(r#"{"kind":"gaussian","sigma":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(g.build().unwrap().dim(), 2);
    }

    #[test]
    fn batch_source_refuses_oversampling() {
        let b = SampleBatch::from_rows(&[vec![1.0], vec![2.0]], SeedLineage::new(0)).unwrap();
        assert!(b.sample(3, SeedLineage::new(0)).is_err());
        assert_eq!(b.sample(1, SeedLineage::new(0)).unwrap().data, vec![1.0]);
    }
}
