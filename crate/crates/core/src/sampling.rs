//! Random matrices for instance generation, multi-start initialization and
//! the verification harness.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{ComplexMatrix, HermitianMatrix, C64};

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // row-major fill so the draw order matches the instance file layout
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = complex_gaussian(rng);
        }
    }
    m
}

/// Hermitian part of a Gaussian matrix scaled by `scale`; spectra of mixed sign.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> HermitianMatrix {
    HermitianMatrix::from_square_unchecked(gaussian_matrix(rng, dim, dim).scale(scale))
}

/// `A A†` for Gaussian `A`, optionally rank deficient.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianMatrix {
    let a = gaussian_matrix(rng, dim, rank.max(1));
    HermitianMatrix::from_square_unchecked(&a * a.adjoint())
}

/// A random member of the sum-power set: PSD blocks with total trace drawn
/// uniformly in `(0, power]`.
pub fn random_feasible_blocks<R: Rng + ?Sized>(
    rng: &mut R,
    users: usize,
    dim: usize,
    power: f64,
) -> Vec<HermitianMatrix> {
    let blocks: Vec<HermitianMatrix> = (0..users)
        .map(|_| {
            let rank = rng.random_range(1..=dim);
            // some users switched off entirely
            let weight: f64 = if rng.random_bool(0.15) {
                0.0
            } else {
                rng.random()
            };
            random_psd(rng, dim, rank).scale(weight)
        })
        .collect();
    let total: f64 = blocks.iter().map(HermitianMatrix::trace).sum();
    if total <= 0.0 {
        return vec![HermitianMatrix::identity(dim).scale(power / (users * dim) as f64); users];
    }
    let target = power * rng.random_range(f64::EPSILON..=1.0);
    blocks.iter().map(|b| b.scale(target / total)).collect()
}
