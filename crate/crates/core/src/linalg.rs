//! Dense symmetric matrices and the handful of spectral operations the
//! bounds need: sorted eigendecompositions, matrix functions, and the
//! Loewner-order test `A ⪰ B`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack for Loewner-order tests: `A ⪰ B` iff `λmin(A − B) ≥ −ORDER_TOL`.
pub const ORDER_TOL: f64 = 1e-10;

/// A dense real symmetric matrix.
///
/// Positive (semi)definiteness is not part of the type; it is declared by the
/// caller through [`SpdMatrix::require_pd`] or [`SpdMatrix::require_psd`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Rebuild `V·diag(h(λ))·Vᵀ`.
    pub fn map(&self, h: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&l| h(l)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&d);
        let out = scaled * self.vectors.transpose();
        symmetrize(&out)
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Sorted symmetric eigendecomposition of an arbitrary square matrix's symmetric part.
pub fn sym_eigen(m: &DMatrix<f64>) -> SymEigen {
    let s = symmetrize(m);
    let eig = SymmetricEigen::new(s);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SymEigen { values, vectors }
}

/// `λmin(sym(A − B))`; nonnegative (up to [`ORDER_TOL`]) iff `A ⪰ B`.
pub fn order_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    sym_eigen(&(a - b)).min()
}

impl SpdMatrix {
    /// Wrap a square matrix, rejecting asymmetry beyond [`SYMMETRY_TOL`]
    /// relative to the largest entry. The stored matrix is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix has non-finite entries".into(),
            ));
        }
        let scale = m.amax();
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric { asymmetry, scale });
        }
        Ok(Self { m: symmetrize(&m) })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "matrix row length",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: DMatrix::identity(p, p),
        }
    }

    pub fn scaled_identity(p: usize, c: f64) -> Self {
        Self {
            m: DMatrix::identity(p, p) * c,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.m.row(i).iter().copied().collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn eigen(&self) -> SymEigen {
        sym_eigen(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().max()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    /// Fails unless every eigenvalue is strictly positive.
    pub fn require_pd(&self, role: &'static str) -> Result<SymEigen> {
        let eig = self.eigen();
        if eig.min() <= 0.0 {
            return Err(Error::NotDefinite {
                role,
                min_eigenvalue: eig.min(),
            });
        }
        Ok(eig)
    }

    /// Fails unless every eigenvalue is ≥ −[`ORDER_TOL`].
    pub fn require_psd(&self, role: &'static str) -> Result<SymEigen> {
        let eig = self.eigen();
        if eig.min() < -ORDER_TOL {
            return Err(Error::NotDefinite {
                role,
                min_eigenvalue: eig.min(),
            });
        }
        Ok(eig)
    }

    /// Apply a scalar function to the spectrum.
    pub fn map_spectrum(&self, h: impl Fn(f64) -> f64) -> Self {
        Self {
            m: self.eigen().map(h),
        }
    }

    /// Principal square root; negative rounding noise is clamped to zero.
    pub fn sqrt(&self) -> Self {
        self.map_spectrum(|l| l.max(0.0).sqrt())
    }

    pub fn ensure_same_dim(&self, other: &SpdMatrix, what: &'static str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SpdMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
