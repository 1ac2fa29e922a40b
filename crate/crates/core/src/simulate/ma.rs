use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GaussianDraw;
use crate::error::{Error, Result};
use crate::matrix::{matrix_from_rows, matrix_to_rows, CovarianceMatrix};
use crate::rng::{SeedLineage, StreamRng};

/// Vector moving average `X_j = ε_j + Σ_{r=1..q} Θ_r ε_{j−r}` with i.i.d.
/// centered Gaussian `ε_j ~ N(0, C)`.
///
/// JSON: `{"innovation": [[..]], "theta": [[[..]], ..]}`; `theta` may be
/// omitted for `q = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaRepr", into = "MaRepr")]
pub struct MaModel {
    innovation: CovarianceMatrix,
    coefficients: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MaRepr {
    innovation: CovarianceMatrix,
    #[serde(default)]
    theta: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MaRepr> for MaModel {
    type Error = Error;

    fn try_from(r: MaRepr) -> Result<Self> {
        let coefficients = r
            .theta
            .iter()
            .map(|t| matrix_from_rows(t))
            .collect::<Result<Vec<_>>>()?;
        MaModel::new(r.innovation, coefficients)
    }
}

impl From<MaModel> for MaRepr {
    fn from(m: MaModel) -> Self {
        MaRepr {
            theta: m.coefficients.iter().map(matrix_to_rows).collect(),
            innovation: m.innovation,
        }
    }
}

impl MaModel {
    pub fn new(innovation: CovarianceMatrix, coefficients: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = innovation.dim();
        if d == 0 {
            return Err(Error::InvalidArgument(
                "MA model needs dimension ≥ 1".into(),
            ));
        }
        for t in &coefficients {
            if t.nrows() != d || t.ncols() != d {
                return Err(Error::DimensionMismatch {
                    what: "MA coefficient",
                    expected: d,
                    found: if t.nrows() != d { t.nrows() } else { t.ncols() },
                });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "MA coefficient has a non-finite entry".into(),
                ));
            }
        }
        Ok(Self {
            innovation,
            coefficients,
        })
    }

    /// i.i.d. `N(0, C)` vectors.
    pub fn iid(innovation: CovarianceMatrix) -> Self {
        Self {
            innovation,
            coefficients: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.innovation.dim()
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn innovation(&self) -> &CovarianceMatrix {
        &self.innovation
    }

    /// `Θ_1, …, Θ_q`.
    pub fn coefficients(&self) -> &[DMatrix<f64>] {
        &self.coefficients
    }

    /// `Θ_0 = I, Θ_1, …, Θ_q`.
    pub fn lag_matrices(&self) -> Vec<DMatrix<f64>> {
        let mut v = vec![DMatrix::identity(self.dim(), self.dim())];
        v.extend(self.coefficients.iter().cloned());
        v
    }

    /// Model with `C` replaced by `λ² C`, i.e. the process `λ X`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            CovarianceMatrix::new(self.innovation.entries() * (lambda * lambda))?,
            self.coefficients.clone(),
        )
    }
}

/// Streaming generator of one stationary path. Holds the last `q + 1`
/// innovations; the first `q` are drawn as burn-in on construction.
pub struct MaPath<'a> {
    model: &'a MaModel,
    draw: &'a GaussianDraw,
    ring: Vec<Vec<f64>>,
    head: usize,
    z: Vec<f64>,
}

impl<'a> MaPath<'a> {
    pub(crate) fn new(model: &'a MaModel, draw: &'a GaussianDraw, rng: &mut StreamRng) -> Self {
        let q = model.order();
        let mut p = Self {
            model,
            draw,
            ring: vec![vec![0.0; model.dim()]; q + 1],
            head: 0,
            z: Vec::with_capacity(draw.normals()),
        };
        for _ in 0..q {
            p.push_innovation(rng);
        }
        p
    }

    fn push_innovation(&mut self, rng: &mut StreamRng) {
        self.head = (self.head + 1) % self.ring.len();
        self.z.clear();
        self.z
            .extend((0..self.draw.normals()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let slot = &mut self.ring[self.head];
        slot.iter_mut().for_each(|v| *v = 0.0);
        self.draw.add_factor_times(&self.z, 1.0, slot);
    }

    /// Writes the next `X_j` into `out`.
    pub fn next_into(&mut self, rng: &mut StreamRng, out: &mut [f64]) {
        self.push_innovation(rng);
        let len = self.ring.len();
        out.copy_from_slice(&self.ring[self.head]);
        for (r, theta) in self.model.coefficients.iter().enumerate() {
            let eps = &self.ring[(self.head + len - r - 1) % len];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, e) in eps.iter().enumerate() {
                    acc += theta[(i, j)] * e;
                }
                *o += acc;
            }
        }
    }
}

impl MaModel {
    pub(crate) fn gaussian_draw(&self) -> GaussianDraw {
        GaussianDraw::new(&self.innovation)
    }

    /// Runs `f` on a fresh path generator driven by `rng`.
    pub fn with_path<T>(
        &self,
        rng: &mut StreamRng,
        f: impl FnOnce(&mut MaPath<'_>, &mut StreamRng) -> T,
    ) -> T {
        let draw = self.gaussian_draw();
        let mut path = MaPath::new(self, &draw, rng);
        f(&mut path, rng)
    }
}

/// `count` independent paths of `length` vectors; `data[(p·length + j)·dim + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceBatch {
    pub dim: usize,
    pub length: usize,
    pub count: usize,
    pub data: Vec<f64>,
    pub lineage: SeedLineage,
}

impl SequenceBatch {
    pub fn path(&self, p: usize) -> &[f64] {
        let w = self.length * self.dim;
        &self.data[p * w..(p + 1) * w]
    }

    pub fn value(&self, p: usize, j: usize) -> &[f64] {
        let start = (p * self.length + j) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Each path flattened into one row of `length · dim` coordinates,
    /// ordered `(X_1, …, X_length)`.
    pub fn into_rows(self) -> super::SampleBatch {
        super::SampleBatch {
            dim: self.length * self.dim,
            count: self.count,
            data: self.data,
            lineage: self.lineage,
        }
    }
}

/// Path `p` draws from `lineage.derive("path", p)`.
pub fn sample_stationary_ma(
    model: &MaModel,
    length: usize,
    count: usize,
    lineage: SeedLineage,
) -> Result<SequenceBatch> {
    if length <= model.order() {
        return Err(Error::InvalidArgument(format!(
            "path length {length} must exceed the MA order {}",
            model.order()
        )));
    }
    let d = model.dim();
    let draw = model.gaussian_draw();
    let mut data = vec![0.0; count * length * d];
    data.par_chunks_mut(length * d)
        .enumerate()
        .for_each(|(p, chunk)| {
            let mut rng = lineage.derive("path", p as u64).rng();
            let mut path = MaPath::new(model, &draw, &mut rng);
            for x in chunk.chunks_exact_mut(d) {
                path.next_into(&mut rng, x);
            }
        });
    Ok(SequenceBatch {
        dim: d,
        length,
        count,
        data,
        lineage,
    })
}
