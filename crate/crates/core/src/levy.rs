//! Finite discrete Lévy measures and Lévy–Khinchin triplets.
//!
//! Lévy measures are restricted to finitely many atoms with finite total
//! mass, i.e. the compound-Poisson regime. The characteristic exponent uses
//! the untruncated convention
//!
//! ```text
//! ln φ(θ) = i⟨θ, a⟩ − ½⟨θ, Σθ⟩ + Σ_atoms mass · (e^{i⟨θ,u⟩} − 1)
//! ```
//!
//! so no truncation function is involved; the compensator is part of `a`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CovarianceMatrix;

const MASS_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "x")]
    pub location: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, mass: f64) -> Self {
        Self { location, mass }
    }
}

/// A finite discrete Lévy measure: atoms away from the origin with strictly
/// positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteLevyMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    total_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default)]
    atoms: Vec<Atom>,
}

impl TryFrom<MeasureRepr> for DiscreteLevyMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        let dim = match (r.dim, r.atoms.first()) {
            (Some(d), _) => d,
            (None, Some(a)) => a.location.len(),
            (None, None) => {
                return Err(Error::InvalidMeasure(
                    "an empty measure needs an explicit \"dim\"".into(),
                ))
            }
        };
        Self::new(dim, r.atoms)
    }
}

impl From<DiscreteLevyMeasure> for MeasureRepr {
    fn from(m: DiscreteLevyMeasure) -> Self {
        Self {
            dim: Some(m.dim),
            atoms: m.atoms,
        }
    }
}

impl DiscreteLevyMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if a.location.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "Levy atom",
                    expected: dim,
                    found: a.location.len(),
                });
            }
            if a.location.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {} has a non-finite location",
                    i + 1
                )));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {} has non-positive mass {}",
                    i + 1,
                    a.mass
                )));
            }
            if a.location.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {} sits at the origin",
                    i + 1
                )));
            }
        }
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Ok(Self {
            dim,
            atoms,
            total_mass,
        })
    }

    /// Like [`new`](Self::new) but also checks a declared total mass.
    pub fn with_total_mass(dim: usize, atoms: Vec<Atom>, declared: f64) -> Result<Self> {
        let m = Self::new(dim, atoms)?;
        if (m.total_mass - declared).abs() > MASS_RTOL * declared.abs().max(m.total_mass) {
            return Err(Error::InvalidMeasure(format!(
                "declared total mass {declared} differs from the sum of masses {}",
                m.total_mass
            )));
        }
        Ok(m)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            atoms: Vec::new(),
            total_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The two-dimensional characteristic `ν_kl = (ν ∘ π_kl⁻¹)` restricted to
    /// the punctured plane (0-based `k < l`). Coinciding images are merged in
    /// order of first appearance; mass projected onto the origin is dropped.
    pub fn project_pair(&self, k: usize, l: usize) -> Result<DiscreteLevyMeasure> {
        if k >= l || l >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "projection indices must satisfy k < l < {}, got ({k}, {l})",
                self.dim
            )));
        }
        let mut out: Vec<Atom> = Vec::new();
        for a in &self.atoms {
            let p = [a.location[k], a.location[l]];
            if p[0] == 0.0 && p[1] == 0.0 {
                continue;
            }
            match out
                .iter_mut()
                .find(|b| b.location[0] == p[0] && b.location[1] == p[1])
            {
                Some(b) => b.mass += a.mass,
                None => out.push(Atom::new(p.to_vec(), a.mass)),
            }
        }
        let total_mass = out.iter().map(|a| a.mass).sum();
        Ok(DiscreteLevyMeasure {
            dim: 2,
            atoms: out,
            total_mass,
        })
    }

    /// `Σ mass · u`.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for a in &self.atoms {
            for (acc, u) in m.iter_mut().zip(&a.location) {
                *acc += a.mass * u;
            }
        }
        m
    }

    /// `Σ mass · u uᵀ`, the covariance contributed by the jumps.
    pub fn second_moment(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut m = vec![vec![0.0; d]; d];
        for a in &self.atoms {
            for k in 0..d {
                for l in 0..d {
                    m[k][l] += a.mass * a.location[k] * a.location[l];
                }
            }
        }
        m
    }
}

/// Free-function form of [`DiscreteLevyMeasure::project_pair`].
pub fn project_levy_pair(
    nu: &DiscreteLevyMeasure,
    k: usize,
    l: usize,
) -> Result<DiscreteLevyMeasure> {
    nu.project_pair(k, l)
}

/// Lévy–Khinchin data `(a, Σ, ν)` of an infinitely divisible vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripletRepr", into = "TripletRepr")]
pub struct IdTriplet {
    drift: Vec<f64>,
    gaussian: CovarianceMatrix,
    levy: DiscreteLevyMeasure,
}

#[derive(Serialize, Deserialize)]
struct TripletRepr {
    drift: Vec<f64>,
    sigma: CovarianceMatrix,
    #[serde(default)]
    levy: Option<MeasureRepr>,
}

impl TryFrom<TripletRepr> for IdTriplet {
    type Error = Error;

    fn try_from(r: TripletRepr) -> Result<Self> {
        let dim = r.drift.len();
        let levy = match r.levy {
            None => DiscreteLevyMeasure::empty(dim),
            Some(m) => DiscreteLevyMeasure::try_from(MeasureRepr {
                dim: m.dim.or(Some(dim)),
                atoms: m.atoms,
            })?,
        };
        IdTriplet::new(r.drift, r.sigma, levy)
    }
}

impl From<IdTriplet> for TripletRepr {
    fn from(t: IdTriplet) -> Self {
        Self {
            drift: t.drift,
            sigma: t.gaussian,
            levy: Some(t.levy.into()),
        }
    }
}

impl IdTriplet {
    pub fn new(
        drift: Vec<f64>,
        gaussian: CovarianceMatrix,
        levy: DiscreteLevyMeasure,
    ) -> Result<Self> {
        let d = drift.len();
        if gaussian.dim() != d {
            return Err(Error::DimensionMismatch {
                what: "Gaussian covariance",
                expected: d,
                found: gaussian.dim(),
            });
        }
        if levy.dim() != d {
            return Err(Error::DimensionMismatch {
                what: "Levy measure",
                expected: d,
                found: levy.dim(),
            });
        }
        if drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("drift must be finite".into()));
        }
        Ok(Self {
            drift,
            gaussian,
            levy,
        })
    }

    pub fn gaussian_only(drift: Vec<f64>, gaussian: CovarianceMatrix) -> Result<Self> {
        let d = drift.len();
        Self::new(drift, gaussian, DiscreteLevyMeasure::empty(d))
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn gaussian(&self) -> &CovarianceMatrix {
        &self.gaussian
    }

    pub fn levy(&self) -> &DiscreteLevyMeasure {
        &self.levy
    }

    /// `ln φ(θ)`.
    pub fn char_exponent(&self, theta: &[f64]) -> Result<Complex64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "characteristic function argument",
                expected: self.dim(),
                found: theta.len(),
            });
        }
        let drift = dot(theta, &self.drift);
        let quad = self.gaussian.quadratic_form(theta);
        let mut exponent = Complex64::new(-0.5 * quad, drift);
        for a in self.levy.atoms() {
            let phase = dot(theta, &a.location);
            exponent += a.mass * (Complex64::new(0.0, phase).exp() - 1.0);
        }
        Ok(exponent)
    }

    /// `φ(θ) = E exp(i⟨θ, X⟩)`.
    pub fn char_function(&self, theta: &[f64]) -> Result<Complex64> {
        Ok(self.char_exponent(theta)?.exp())
    }

    /// `E X = a + Σ mass · u`.
    pub fn mean(&self) -> Vec<f64> {
        self.drift
            .iter()
            .zip(self.levy.first_moment())
            .map(|(a, m)| a + m)
            .collect()
    }

    /// `Cov X = Σ + Σ mass · u uᵀ`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let mut c = self.levy.second_moment();
        for (k, row) in c.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                *v += self.gaussian.get(k, l);
            }
        }
        c
    }
}

/// Free-function form of [`IdTriplet::char_function`].
pub fn char_function_eval(triplet: &IdTriplet, theta: &[f64]) -> Result<Complex64> {
    triplet.char_function(theta)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(atoms: &[(&[f64], f64)]) -> DiscreteLevyMeasure {
        let dim = atoms[0].0.len();
        DiscreteLevyMeasure::new(
            dim,
            atoms
                .iter()
                .map(|(x, m)| Atom::new(x.to_vec(), *m))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn projection_onto_first_and_third() {
        let nu = measure(&[(&[1.0, 2.0, 0.0, 0.0], 0.5), (&[-1.0, 0.0, -3.0, 0.0], 0.2)]);
        let p = project_levy_pair(&nu, 0, 2).unwrap();
        assert_eq!(
            p.atoms(),
            &[
                Atom::new(vec![1.0, 0.0], 0.5),
                Atom::new(vec![-1.0, -3.0], 0.2)
            ]
        );
    }

    #[test]
    fn projection_to_origin_is_dropped() {
        let nu = measure(&[(&[0.0, 5.0, 0.0, 0.0], 0.3)]);
        let p = nu.project_pair(0, 2).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.total_mass(), 0.0);
    }

    #[test]
    fn projection_of_empty_measure() {
        let p = DiscreteLevyMeasure::empty(3).project_pair(1, 2).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn projection_merges_coinciding_images() {
        let nu = measure(&[(&[1.0, 7.0, 2.0], 0.5), (&[1.0, -7.0, 2.0], 0.25)]);
        let p = nu.project_pair(0, 2).unwrap();
        assert_eq!(p.atoms(), &[Atom::new(vec![1.0, 2.0], 0.75)]);
    }

    #[test]
    fn projection_index_errors() {
        let nu = measure(&[(&[1.0, 1.0], 1.0)]);
        assert!(nu.project_pair(1, 0).is_err());
        assert!(nu.project_pair(0, 2).is_err());
    }

    #[test]
    fn atom_at_origin_and_bad_mass_rejected() {
        assert!(DiscreteLevyMeasure::new(2, vec![Atom::new(vec![0.0, 0.0], 1.0)]).is_err());
        assert!(DiscreteLevyMeasure::new(2, vec![Atom::new(vec![1.0, 0.0], 0.0)]).is_err());
        assert!(DiscreteLevyMeasure::new(2, vec![Atom::new(vec![1.0], 1.0)]).is_err());
        assert!(
            DiscreteLevyMeasure::with_total_mass(1, vec![Atom::new(vec![1.0], 1.0)], 1.5).is_err()
        );
        assert!(
            DiscreteLevyMeasure::with_total_mass(1, vec![Atom::new(vec![1.0], 1.0)], 1.0).is_ok()
        );
    }

    #[test]
    fn char_function_at_zero_is_one() {
        let t = IdTriplet::new(
            vec![0.3, -1.0],
            CovarianceMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 2.0]]).unwrap(),
            measure(&[(&[1.0, -1.0], 0.7)]),
        )
        .unwrap();
        let phi = t.char_function(&[0.0, 0.0]).unwrap();
        assert_eq!(phi, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn char_function_gaussian_case() {
        let sigma = CovarianceMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let t = IdTriplet::gaussian_only(vec![0.0, 0.0], sigma).unwrap();
        let theta = [0.7, -0.4];
        // θᵀΣθ = 0.49 - 0.28 + 0.32
        let expected = (-0.5 * (0.49 - 0.28 + 0.32_f64)).exp();
        let phi = t.char_function(&theta).unwrap();
        assert!((phi.re - expected).abs() < 1e-15 && phi.im.abs() < 1e-15);
    }

    #[test]
    fn char_function_compound_poisson_closed_form() {
        let t = IdTriplet::new(
            vec![0.0, 0.0],
            CovarianceMatrix::zeros(2),
            measure(&[(&[1.0, 2.0], 1.5)]),
        )
        .unwrap();
        let theta = [0.3, 0.1];
        let phase: f64 = 0.5;
        let expected = (1.5 * (Complex64::new(phase.cos(), phase.sin()) - 1.0)).exp();
        assert!((t.char_function(&theta).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let t: IdTriplet = serde_json::from_str(
            r#"{"drift":[0,0],"sigma":[[1,0],[0,1]],"levy":{"atoms":[{"x":[1,1],"mass":0.5}]}}"#,
        )
        .unwrap();
        assert_eq!(t.levy().total_mass(), 0.5);
        let g: IdTriplet = serde_json::from_str(r#"{"drift":[1],"sigma":[[2]]}"#).unwrap();
        assert!(g.levy().is_empty());
        let back: IdTriplet = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
