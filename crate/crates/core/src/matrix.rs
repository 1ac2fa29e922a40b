//! Symmetric positive semidefinite covariance matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry, scaled by the largest absolute entry.
pub const SYMMETRY_RTOL: f64 = 1e-12;
/// PSD tolerance: the minimum eigenvalue may dip to `-PSD_RTOL * trace`.
pub const PSD_RTOL: f64 = 1e-10;

/// A symmetric, positive semidefinite real matrix.
///
/// Serialized row-major as an array of arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and semidefiniteness. The stored matrix is the
    /// exact symmetrization `(A + Aᵀ) / 2`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let entries = symmetrized(&entries)?;
        check_psd(&entries)?;
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k, l)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    /// Returns `L` with `L Lᵀ` equal to the matrix after clipping negative
    /// eigenvalues to zero. Works for rank-deficient inputs.
    pub fn factor(&self) -> DMatrix<f64> {
        let d = self.dim();
        if d == 0 {
            return DMatrix::zeros(0, 0);
        }
        let eig = SymmetricEigen::new(self.entries.clone());
        let mut l = eig.eigenvectors;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            l.column_mut(j).scale_mut(s);
        }
        l
    }

    /// `x ↦ ⟨x, Σ x⟩`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for k in 0..d {
            let mut row = 0.0;
            for l in 0..d {
                row += self.entries[(k, l)] * x[l];
            }
            acc += x[k] * row;
        }
        acc
    }
}

impl TryFrom<Vec<Vec<f64>>> for CovarianceMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<CovarianceMatrix> for Vec<Vec<f64>> {
    fn from(m: CovarianceMatrix) -> Self {
        m.to_rows()
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    for row in rows {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                what: "matrix row",
                expected: m,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn symmetrized(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix entries must be finite".into(),
        ));
    }
    let scale = a.amax();
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            if diff > SYMMETRY_RTOL * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }
    Ok((a + a.transpose()) * 0.5)
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

/// Checks `λ_min ≥ -PSD_RTOL · trace` on an already symmetric matrix.
pub fn check_psd(a: &DMatrix<f64>) -> Result<()> {
    let tolerance = PSD_RTOL * a.trace().max(0.0);
    let min_eigenvalue = min_eigenvalue(a);
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue,
            tolerance,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_rank_deficient_matrix() {
        let m = CovarianceMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let l = m.factor();
        let back = &l * l.transpose();
        assert!((back - m.entries()).amax() < 1e-14);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let err = CovarianceMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -0.1]]).unwrap_err();
        assert!(
            matches!(err, Error::NotPsd { min_eigenvalue, .. } if (min_eigenvalue + 0.1).abs() < 1e-12)
        );
    }

    #[test]
    fn asymmetric_is_rejected() {
        let err = CovarianceMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { row: 0, col: 1, .. }));
    }

    #[test]
    fn tiny_negative_eigenvalue_within_tolerance_is_accepted() {
        // eigenvalues 2 and -1e-12; tolerance is 1e-10 * trace.
        let e = 1e-12;
        let m = CovarianceMatrix::from_rows(&[
            vec![1.0 - e / 2.0, 1.0 + e / 2.0],
            vec![1.0 + e / 2.0, 1.0 - e / 2.0],
        ]);
        assert!(m.is_ok());
    }

    #[test]
    fn zero_matrix_is_valid() {
        let m = CovarianceMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.factor().amax(), 0.0);
    }
}
