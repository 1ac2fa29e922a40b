use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{dot, IdTriplet};
use crate::rng::{SeedLineage, DEFAULT_SEED};
use crate::simulate::{sample_compound_poisson_id, sample_hps_pair};
use crate::stats::{covariance_with_se, gauss_legendre_unit};

/// Logistic factor `σ(⟨w,x⟩ + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Bounded smooth test function with bounded derivatives, tagged by `"form"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum SmoothFunction {
    Constant {
        value: f64,
    },
    /// `scale · tanh(⟨w,x⟩ + b)`.
    TanhAffine {
        weights: Vec<f64>,
        bias: f64,
        scale: f64,
    },
    /// `Π_j σ(⟨w_j,x⟩ + b_j)`.
    LogisticProduct {
        factors: Vec<Logistic>,
    },
    Sum {
        terms: Vec<SmoothFunction>,
    },
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SmoothFunction {
    /// Checks finiteness and that every weight vector has length `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |w: &[f64], extra: &[f64]| {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "smooth function weights",
                    expected: dim,
                    found: w.len(),
                });
            }
            if w.iter().chain(extra).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "smooth function has a non-finite parameter".into(),
                ));
            }
            Ok(())
        };
        match self {
            SmoothFunction::Constant { value } => check(&vec![0.0; dim], &[*value]),
            SmoothFunction::TanhAffine {
                weights,
                bias,
                scale,
            } => check(weights, &[*bias, *scale]),
            SmoothFunction::LogisticProduct { factors } => factors
                .iter()
                .try_for_each(|f| check(&f.weights, &[f.bias])),
            SmoothFunction::Sum { terms } => terms.iter().try_for_each(|t| t.validate(dim)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SmoothFunction::Constant { value } => *value,
            SmoothFunction::TanhAffine {
                weights,
                bias,
                scale,
            } => scale * (dot(weights, x) + bias).tanh(),
            SmoothFunction::LogisticProduct { factors } => factors
                .iter()
                .map(|f| sigmoid(dot(&f.weights, x) + f.bias))
                .product(),
            SmoothFunction::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Adds `∇ψ(x)` to `out`.
    pub fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SmoothFunction::Constant { .. } => {}
            SmoothFunction::TanhAffine {
                weights,
                bias,
                scale,
            } => {
                let t = (dot(weights, x) + bias).tanh();
                let c = scale * (1.0 - t * t);
                for (o, w) in out.iter_mut().zip(weights) {
                    *o += c * w;
                }
            }
            SmoothFunction::LogisticProduct { factors } => {
                let s: Vec<f64> = factors
                    .iter()
                    .map(|f| sigmoid(dot(&f.weights, x) + f.bias))
                    .collect();
                for (j, f) in factors.iter().enumerate() {
                    // ∂/∂z σ = σ(1−σ); the other factors multiply through
                    let others: f64 = s
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j)
                        .map(|(_, v)| v)
                        .product();
                    let c = others * s[j] * (1.0 - s[j]);
                    for (o, w) in out.iter_mut().zip(&f.weights) {
                        *o += c * w;
                    }
                }
            }
            SmoothFunction::Sum { terms } => terms.iter().for_each(|t| t.add_gradient(x, out)),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_gradient(x, &mut g);
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpsConfig {
    /// Samples for the covariance estimate and per quadrature node.
    pub samples: usize,
    /// Gauss–Legendre nodes in `α`.
    pub nodes: usize,
    pub seed: u64,
}

impl Default for HpsConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            nodes: 8,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpsNode {
    pub alpha: f64,
    pub weight: f64,
    pub mean: f64,
    pub standard_error: f64,
}

/// Both sides of the interpolation identity
/// `Cov(ψ₁(X), ψ₂(X)) = ∫₀¹ E[⟨Σ∇ψ₁(Y^α), ∇ψ₂(Z^α)⟩ + ∫ Δ_uψ₁(Y^α) Δ_uψ₂(Z^α) ν(du)] dα`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpsReport {
    pub lhs: f64,
    pub lhs_standard_error: f64,
    pub rhs: f64,
    pub rhs_standard_error: f64,
    pub combined_standard_error: f64,
    /// `|lhs − rhs| ≤ 3 · combined_standard_error`.
    pub agree: bool,
    pub nodes: Vec<HpsNode>,
    pub config: HpsConfig,
    pub lineage: SeedLineage,
}

/// Monte Carlo evaluation of both sides of the covariance interpolation formula.
pub fn hps_formula_verify(
    triplet: &IdTriplet,
    psi1: &SmoothFunction,
    psi2: &SmoothFunction,
    cfg: &HpsConfig,
) -> Result<HpsReport> {
    let d = triplet.dim();
    psi1.validate(d)?;
    psi2.validate(d)?;
    if cfg.samples < 2 || cfg.nodes == 0 {
        return Err(Error::InvalidArgument(
            "HPS verification needs ≥ 2 samples and ≥ 1 node".into(),
        ));
    }
    let root = SeedLineage::new(cfg.seed).derive("hps-verify", 0);
    let x = sample_compound_poisson_id(triplet, cfg.samples, root.derive("lhs", 0));
    let v1: Vec<f64> = x.rows().map(|r| psi1.eval(r)).collect();
    let v2: Vec<f64> = x.rows().map(|r| psi2.eval(r)).collect();
    let lhs = covariance_with_se(&v1, &v2);

    let sigma = triplet.gaussian().entries();
    let atoms = triplet.levy().atoms();
    let mut nodes = Vec::with_capacity(cfg.nodes);
    let mut rhs = 0.0;
    let mut rhs_var = 0.0;
    for (k, (alpha, weight)) in gauss_legendre_unit(cfg.nodes).into_iter().enumerate() {
        let pair = sample_hps_pair(
            triplet,
            alpha,
            cfg.samples,
            root.derive("rhs-node", k as u64),
        )?;
        let mut shifted_y = vec![0.0; d];
        let mut shifted_z = vec![0.0; d];
        let vals: Vec<f64> = pair
            .rows()
            .map(|r| {
                let (y, z) = r.split_at(d);
                let gy = psi1.gradient(y);
                let gz = psi2.gradient(z);
                let mut v = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        v += gy[i] * sigma[(i, j)] * gz[j];
                    }
                }
                let (p1y, p2z) = (psi1.eval(y), psi2.eval(z));
                for a in atoms {
                    for i in 0..d {
                        shifted_y[i] = y[i] + a.location[i];
                        shifted_z[i] = z[i] + a.location[i];
                    }
                    v += a.mass * (psi1.eval(&shifted_y) - p1y) * (psi2.eval(&shifted_z) - p2z);
                }
                v
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        rhs += weight * mean;
        rhs_var += weight * weight * se * se;
        nodes.push(HpsNode {
            alpha,
            weight,
            mean,
            standard_error: se,
        });
    }
    let rhs_se = rhs_var.sqrt();
    let combined = (lhs.standard_error.powi(2) + rhs_var).sqrt();
    Ok(HpsReport {
        lhs: lhs.estimate,
        lhs_standard_error: lhs.standard_error,
        rhs,
        rhs_standard_error: rhs_se,
        combined_standard_error: combined,
        agree: (lhs.estimate - rhs).abs() <= 3.0 * combined,
        nodes,
        config: cfg.clone(),
        lineage: root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, DiscreteLevyMeasure};
    use crate::matrix::CovarianceMatrix;

    fn numeric_gradient(f: &SmoothFunction, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f.eval(&a) - f.eval(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let f = SmoothFunction::Sum {
            terms: vec![
                SmoothFunction::TanhAffine {
                    weights: vec![0.7, -0.3],
                    bias: 0.1,
                    scale: 2.0,
                },
                SmoothFunction::LogisticProduct {
                    factors: vec![
                        Logistic {
                            weights: vec![1.0, 0.5],
                            bias: -0.2,
                        },
                        Logistic {
                            weights: vec![-0.4, 1.2],
                            bias: 0.3,
                        },
                    ],
                },
                SmoothFunction::Constant { value: 4.0 },
            ],
        };
        for x in [[0.0, 0.0], [1.0, -2.0], [-0.5, 0.8]] {
            let g = f.gradient(&x);
            let n = numeric_gradient(&f, &x);
            for (a, b) in g.iter().zip(&n) {
                assert!((a - b).abs() < 1e-7, "{g:?} vs {n:?}");
            }
        }
    }

    #[test]
    fn constant_psi_gives_zero_on_both_sides() {
        let t = IdTriplet::new(
            vec![0.0, 0.0],
            CovarianceMatrix::identity(2),
            DiscreteLevyMeasure::new(2, vec![Atom::new(vec![1.0, 1.0], 0.5)]).unwrap(),
        )
        .unwrap();
        let c = SmoothFunction::Constant { value: 1.5 };
        let f = SmoothFunction::TanhAffine {
            weights: vec![1.0, 0.0],
            bias: 0.0,
            scale: 1.0,
        };
        let cfg = HpsConfig {
            samples: 2000,
            nodes: 3,
            seed: 1,
        };
        let r = hps_formula_verify(&t, &c, &f, &cfg).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.agree);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let t = IdTriplet::gaussian_only(vec![0.0], CovarianceMatrix::identity(1)).unwrap();
        let f = SmoothFunction::TanhAffine {
            weights: vec![1.0, 0.0],
            bias: 0.0,
            scale: 1.0,
        };
        assert!(hps_formula_verify(&t, &f, &f, &HpsConfig::default()).is_err());
    }
}
