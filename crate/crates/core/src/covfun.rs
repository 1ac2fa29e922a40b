//! Matrix-valued covariance functions `K^{k,l}(s,t) = Cov(X_s^k, X_t^l)` and
//! time grids.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{matrix_from_rows, CovarianceMatrix};

/// Strictly increasing times `0 = t_0 < t_1 < … < t_n`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("need at least two times".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, got {}",
                times[0]
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of increments `n`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(times: Vec<f64>) -> Result<Self> {
        Self::new(times)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovFamily {
    /// `k(s,t) = min(s,t)`.
    BrownianMin,
    /// `k(s,t) = ½(s^{2H} + t^{2H} − |t−s|^{2H})`.
    Fbm,
    /// `k(s,t) = s·t`.
    Product,
    /// Tabulated Gram matrix on a finite set of times.
    Grid,
}

/// Family parameters. Analytic families are separable,
/// `K^{k,l}(s,t) = coef[k][l] · k(s,t)`, with `coef` a PSD matrix
/// (default: the 1×1 identity). A grid family tabulates the Gram matrix over
/// `(time, coordinate)` pairs, row index `i·d + k` for time `times[i]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CovParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<f64>>>,
}

/// JSON form: `{"family": "brownian-min" | "fbm" | "product" | "grid", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovFunctionSpec {
    pub family: CovFamily,
    #[serde(default)]
    pub params: CovParams,
}

type CustomKernel = Arc<dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Separable {
        family: CovFamily,
        hurst: f64,
        coef: DMatrix<f64>,
    },
    Grid {
        times: Vec<f64>,
        gram: DMatrix<f64>,
    },
    Custom(CustomKernel),
}

/// A `d × d` family of covariance functions, analytic or tabulated.
#[derive(Clone)]
pub struct CovFunction {
    dim: usize,
    kind: Kind,
    spec: Option<CovFunctionSpec>,
}

impl fmt::Debug for CovFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            Some(spec) => f
                .debug_struct("CovFunction")
                .field("dim", &self.dim)
                .field("spec", spec)
                .finish(),
            None => f
                .debug_struct("CovFunction")
                .field("dim", &self.dim)
                .field("kind", &"custom")
                .finish(),
        }
    }
}

impl CovFunction {
    pub fn from_spec(spec: CovFunctionSpec) -> Result<Self> {
        let p = &spec.params;
        let kind = match spec.family {
            CovFamily::Grid => {
                let times = p.times.clone().ok_or_else(|| {
                    Error::InvalidCovFunction("grid family needs \"times\"".into())
                })?;
                let gram = p.gram.as_ref().ok_or_else(|| {
                    Error::InvalidCovFunction("grid family needs \"gram\"".into())
                })?;
                let gram = matrix_from_rows(gram)?;
                return Self::grid(times, gram).map(|mut c| {
                    c.spec = Some(spec);
                    c
                });
            }
            family => {
                let coef = match &p.coef {
                    Some(rows) => CovarianceMatrix::from_rows(rows)
                        .map_err(|e| Error::InvalidCovFunction(format!("coef: {e}")))?
                        .entries()
                        .clone(),
                    None => DMatrix::identity(1, 1),
                };
                let hurst = match family {
                    CovFamily::Fbm => {
                        let h = p.hurst.ok_or_else(|| {
                            Error::InvalidCovFunction("fbm family needs \"hurst\"".into())
                        })?;
                        if !(h > 0.0 && h < 1.0) {
                            return Err(Error::InvalidCovFunction(format!(
                                "hurst must lie in (0,1), got {h}"
                            )));
                        }
                        h
                    }
                    _ => 0.5,
                };
                Kind::Separable {
                    family,
                    hurst,
                    coef,
                }
            }
        };
        let dim = match &kind {
            Kind::Separable { coef, .. } => coef.nrows(),
            _ => unreachable!(),
        };
        Ok(Self {
            dim,
            kind,
            spec: Some(spec),
        })
    }

    fn separable(
        family: CovFamily,
        hurst: Option<f64>,
        coef: Option<&CovarianceMatrix>,
    ) -> Result<Self> {
        Self::from_spec(CovFunctionSpec {
            family,
            params: CovParams {
                hurst,
                coef: coef.map(CovarianceMatrix::to_rows),
                ..CovParams::default()
            },
        })
    }

    /// Scalar Brownian covariance `min(s,t)`.
    pub fn brownian_min() -> Self {
        Self::separable(CovFamily::BrownianMin, None, None).expect("valid family")
    }

    /// `coef[k][l] · min(s,t)`: a Brownian motion with covariance matrix `coef`.
    pub fn brownian_min_with(coef: &CovarianceMatrix) -> Result<Self> {
        Self::separable(CovFamily::BrownianMin, None, Some(coef))
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::separable(CovFamily::Fbm, Some(hurst), None)
    }

    pub fn fbm_with(hurst: f64, coef: &CovarianceMatrix) -> Result<Self> {
        Self::separable(CovFamily::Fbm, Some(hurst), Some(coef))
    }

    /// Scalar `s·t`.
    pub fn product() -> Self {
        Self::separable(CovFamily::Product, None, None).expect("valid family")
    }

    /// Tabulated values. `gram` has side `times.len() · d`, index `i·d + k`,
    /// and must be symmetric, which encodes `K^{k,l}(s,t) = K^{l,k}(t,s)`.
    /// Positive semidefiniteness is checked when the function is used.
    pub fn grid(times: Vec<f64>, gram: DMatrix<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidCovFunction(
                "grid needs at least one time".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0)
            || times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidCovFunction(
                "grid times must be finite, non-negative and strictly increasing".into(),
            ));
        }
        let side = gram.nrows();
        if gram.ncols() != side || side % times.len() != 0 || side == 0 {
            return Err(Error::InvalidCovFunction(format!(
                "gram side {side} is not a multiple of {} times",
                times.len()
            )));
        }
        let scale = gram.amax();
        for i in 0..side {
            for j in (i + 1)..side {
                if (gram[(i, j)] - gram[(j, i)]).abs() > crate::matrix::SYMMETRY_RTOL * scale {
                    return Err(Error::InvalidCovFunction(
                        "gram must be symmetric (K^{k,l}(s,t) = K^{l,k}(t,s))".into(),
                    ));
                }
            }
        }
        let dim = side / times.len();
        let spec = CovFunctionSpec {
            family: CovFamily::Grid,
            params: CovParams {
                times: Some(times.clone()),
                gram: Some(crate::matrix::matrix_to_rows(&gram)),
                ..CovParams::default()
            },
        };
        Ok(Self {
            dim,
            kind: Kind::Grid { times, gram },
            spec: Some(spec),
        })
    }

    /// A caller-supplied kernel `(k, l, s, t) ↦ K^{k,l}(s,t)`; not serializable.
    pub fn custom(
        dim: usize,
        kernel: impl Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            kind: Kind::Custom(Arc::new(kernel)),
            spec: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> Option<&CovFunctionSpec> {
        self.spec.as_ref()
    }

    /// `K^{k,l}(s,t)` for 0-based coordinates and `s, t ≥ 0`.
    pub fn eval(&self, k: usize, l: usize, s: f64, t: f64) -> Result<f64> {
        if k >= self.dim || l >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "coordinate pair ({k}, {l}) out of range for dimension {}",
                self.dim
            )));
        }
        if !(s >= 0.0 && t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "times must be non-negative, got ({s}, {t})"
            )));
        }
        match &self.kind {
            Kind::Separable {
                family,
                hurst,
                coef,
            } => {
                let base = match family {
                    CovFamily::BrownianMin => s.min(t),
                    CovFamily::Product => s * t,
                    CovFamily::Fbm => {
                        let e = 2.0 * hurst;
                        0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
                    }
                    CovFamily::Grid => unreachable!(),
                };
                Ok(coef[(k, l)] * base)
            }
            Kind::Grid { times, gram } => {
                let i = grid_index(times, s)?;
                let j = grid_index(times, t)?;
                Ok(gram[(i * self.dim + k, j * self.dim + l)])
            }
            Kind::Custom(f) => Ok(f(k, l, s, t)),
        }
    }

    /// Largest `|K^{k,l}(s,t)|` over the given times.
    pub fn scale_over(&self, times: &[f64]) -> Result<f64> {
        let mut scale: f64 = 0.0;
        for k in 0..self.dim {
            for l in 0..self.dim {
                for &s in times {
                    for &t in times {
                        scale = scale.max(self.eval(k, l, s, t)?.abs());
                    }
                }
            }
        }
        Ok(scale)
    }
}

impl TryFrom<CovFunctionSpec> for CovFunction {
    type Error = Error;

    fn try_from(spec: CovFunctionSpec) -> Result<Self> {
        Self::from_spec(spec)
    }
}

impl<'de> Deserialize<'de> for CovFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = CovFunctionSpec::deserialize(d)?;
        Self::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

impl Serialize for CovFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.spec {
            Some(spec) => spec.serialize(s),
            None => Err(serde::ser::Error::custom(
                "custom covariance functions are not serializable",
            )),
        }
    }
}

fn grid_index(times: &[f64], t: f64) -> Result<usize> {
    times
        .iter()
        .position(|&u| (u - t).abs() <= 1e-12 * t.abs().max(1.0))
        .ok_or_else(|| Error::InvalidArgument(format!("time {t} is not on the tabulated grid")))
}

/// Covariance matrix of the stacked increment vector
/// `(ΔX_1, …, ΔX_n)`, `ΔX_i = X_{t_i} − X_{t_{i−1}}`, with row index
/// `(i−1)·d + k`. Each entry is the rectangle increment of `K^{k,l}` over
/// `(t_{i−1}, t_i] × (t_{j−1}, t_j]`. Fails if the result is not PSD.
pub fn increments_covariance(cov: &CovFunction, grid: &TimeGrid) -> Result<CovarianceMatrix> {
    CovarianceMatrix::new(increments_gram(cov, grid)?)
}

pub(crate) fn increments_gram(cov: &CovFunction, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let d = cov.dim();
    let t = grid.times();
    let n = grid.intervals();
    let mut m = DMatrix::zeros(n * d, n * d);
    for i in 1..=n {
        for j in 1..=n {
            for k in 0..d {
                for l in 0..d {
                    let v = cov.eval(k, l, t[i], t[j])?
                        - cov.eval(k, l, t[i], t[j - 1])?
                        - cov.eval(k, l, t[i - 1], t[j])?
                        + cov.eval(k, l, t[i - 1], t[j - 1])?;
                    m[((i - 1) * d + k, (j - 1) * d + l)] = v;
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 2.0]).is_ok());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0]).is_err());
    }

    #[test]
    fn brownian_increments_are_independent() {
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let c = increments_covariance(&CovFunction::brownian_min(), &g).unwrap();
        assert_eq!(c.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn product_kernel_gives_rank_one() {
        // rectangle of s·t over (a,b]×(c,e] is (b−a)(e−c)
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let c = increments_covariance(&CovFunction::product(), &g).unwrap();
        assert_eq!(c.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = TimeGrid::new(vec![0.0, 0.5, 2.0]).unwrap();
        let c = increments_covariance(&CovFunction::product(), &g).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0.25, 0.75], vec![0.75, 2.25]]);
    }

    #[test]
    fn planted_negative_eigenvalue_is_an_error() {
        // Increment Gram [[1, 0], [0, -0.1]].
        let gram = matrix_from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.9],
        ])
        .unwrap();
        let k = CovFunction::grid(vec![0.0, 1.0, 2.0], gram).unwrap();
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let err = increments_covariance(&k, &g).unwrap_err();
        assert!(
            matches!(err, Error::NotPsd { min_eigenvalue, .. } if (min_eigenvalue + 0.1).abs() < 1e-12)
        );
    }

    #[test]
    fn multivariate_brownian_blocks() {
        let coef = CovarianceMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let k = CovFunction::brownian_min_with(&coef).unwrap();
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let c = increments_covariance(&k, &g).unwrap();
        assert_eq!(
            c.to_rows(),
            vec![
                vec![1.0, -1.0, 0.0, 0.0],
                vec![-1.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, -1.0],
                vec![0.0, 0.0, -1.0, 1.0],
            ]
        );
    }

    #[test]
    fn spec_json() {
        let k: CovFunction =
            serde_json::from_str(r#"{"family":"fbm","params":{"hurst":0.7}}"#).unwrap();
        assert_eq!(k.dim(), 1);
        assert!((k.eval(0, 0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let k: CovFunction = serde_json::from_str(r#"{"family":"brownian-min"}"#).unwrap();
        assert_eq!(k.eval(0, 0, 2.0, 3.0).unwrap(), 2.0);
        assert!(
            serde_json::from_str::<CovFunction>(r#"{"family":"fbm","params":{"hurst":1.5}}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<CovFunction>(
            r#"{"family":"grid","params":{"times":[0,1]}}"#
        )
        .is_err());
    }

    #[test]
    fn grid_lookup_off_grid_fails() {
        let gram = matrix_from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let k = CovFunction::grid(vec![0.0, 1.0], gram).unwrap();
        assert_eq!(k.eval(0, 0, 1.0, 1.0).unwrap(), 1.0);
        assert!(k.eval(0, 0, 0.5, 1.0).is_err());
    }
}
