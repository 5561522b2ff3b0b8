//! Dense complex matrices with the Hermitian operations the optimizer needs:
//! eigendecomposition, log-determinant of positive definite matrices,
//! Frobenius distance and the PSD/NSD cone projections.
//!
//! Every operation that produces a Hermitian result re-symmetrizes before
//! returning it, so downstream decompositions never see drifted input.

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{mismatch, Error, Result};

pub type C64 = Complex64;

/// Dense row/column-indexed complex matrix.
pub type ComplexMatrix = DMatrix<C64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Returns `true` when every entry of `m` has finite components.
pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest `|A[i][j] - conj(A[j][i])|`.
pub fn hermitian_asymmetry(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A square complex matrix equal to its own conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates `m` against the Hermitian tolerance and stores its exact
    /// Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if !all_finite(&m) {
            return Err(Error::NonFinite);
        }
        let asymmetry = hermitian_asymmetry(&m);
        if asymmetry > HERMITIAN_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::from_square_unchecked(m))
    }

    /// Hermitian part of a square matrix, no tolerance check.
    pub(crate) fn from_square_unchecked(m: ComplexMatrix) -> Self {
        let adjoint = m.adjoint();
        Self((m + adjoint).scale(0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&d| C64::new(d, 0.0)));
        Self(ComplexMatrix::from_diagonal(&v))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.scale(factor))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_square_unchecked(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_square_unchecked(&self.0 - &other.0)
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        Self::from_square_unchecked(&self.0 + other.0.scale(factor))
    }

    /// `Re Tr(self† other)`; the real inner product on Hermitian matrices.
    pub fn inner(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = eig_hermitian(self)?;
        Ok(eig.eigenvalues.last().copied().unwrap_or(0.0))
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted non-increasing.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `U diag(f(λ)) U†`, re-symmetrized.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(k).scale_mut(w);
        }
        HermitianMatrix::from_square_unchecked(scaled * u.adjoint())
    }

    pub fn recompose(&self) -> HermitianMatrix {
        self.recompose_with(|l| l)
    }
}

/// `(A + A†) / 2`
pub fn symmetrize(a: &ComplexMatrix) -> Result<HermitianMatrix> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(HermitianMatrix::from_square_unchecked(a.clone()))
}

pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep the routine's output order
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Lower Cholesky factor of a Hermitian matrix; fails on any non-positive
/// pivot. The complex `sqrt` used by generic factorizations happily returns
/// imaginary pivots, so the real pivot is checked here.
fn cholesky_lower(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    let m = &a.0;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let diag = pivot.sqrt();
        l[(j, j)] = C64::new(diag, 0.0);
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / diag;
        }
    }
    Ok(l)
}

/// Natural log-determinant of a Hermitian positive definite matrix via its
/// Cholesky factor.
pub fn logdet_hpd(a: &HermitianMatrix) -> Result<f64> {
    let l = cholesky_lower(a)?;
    Ok(2.0 * l.diagonal().iter().map(|z| z.re.ln()).sum::<f64>())
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_hpd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let chol = Cholesky::pack_dirty(cholesky_lower(a)?);
    Ok(HermitianMatrix::from_square_unchecked(chol.inverse()))
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(mismatch(
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    let sq: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    Ok(sq.sqrt())
}

/// Projection onto the PSD cone: `U diag(max(λ, 0)) U†`.
pub fn psd_part(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig_hermitian(a)?.recompose_with(|l| l.max(0.0)))
}

/// Projection onto the NSD cone: `U diag(min(λ, 0)) U†`.
pub fn nsd_part(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig_hermitian(a)?.recompose_with(|l| l.min(0.0)))
}
