//! Euclidean projection of a tuple of Hermitian blocks onto
//! `{Q_i ⪰ 0, Σ Tr(Q_i) ≤ P}`.
//!
//! The blocks are treated as one block-diagonal matrix `D`. Eliminating the
//! PSD multiplier from the Lagrangian dual leaves a one-dimensional concave
//! problem in the trace multiplier `μ`:
//!
//! ```text
//! ψ(μ) = -½ Σ_j max(0, λ_j - μ)² - μ P + ½ ‖D‖²_F,   μ ≥ 0
//! ```
//!
//! `ψ` is quadratic between consecutive eigenvalues of `D`, so its maximizer
//! is found by sweeping those intervals from the top of the spectrum down.
//! The projection keeps the eigenvectors of every block and replaces each
//! eigenvalue `λ` by `max(0, λ - μ*)`.

use crate::channel::{check_blocks, CovarianceSet};
use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, EigenDecomposition, HermitianMatrix};

/// Slack for accepting a stationary point on an interval boundary, relative
/// to the spectrum scale.
pub const INTERVAL_TOL: f64 = 1e-12;

/// `diag(Q_1, ..., Q_K)`, kept as its blocks.
#[derive(Clone, Debug)]
pub struct BlockDiagonal {
    blocks: Vec<HermitianMatrix>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Result<Self> {
        let dim = blocks
            .first()
            .map(HermitianMatrix::dim)
            .ok_or(Error::ZeroDimension)?;
        check_blocks(&blocks, blocks.len(), dim)?;
        Ok(Self { blocks })
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[HermitianMatrix] {
        &self.blocks
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(HermitianMatrix::frobenius_norm_sq)
            .sum()
    }
}

/// Spectrum of a block-diagonal matrix together with the per-block factors.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    /// All `K * nr` eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub decompositions: Vec<EigenDecomposition>,
}

pub fn block_eigenvalues(d: &BlockDiagonal) -> Result<BlockSpectrum> {
    let decompositions = d
        .blocks
        .iter()
        .map(eig_hermitian)
        .collect::<Result<Vec<_>>>()?;
    let mut tagged: Vec<(f64, usize, usize)> = decompositions
        .iter()
        .enumerate()
        .flat_map(|(b, eig)| {
            eig.eigenvalues
                .iter()
                .enumerate()
                .map(move |(k, &l)| (l, b, k))
        })
        .collect();
    // ties broken by block index, then position within the block
    tagged.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    Ok(BlockSpectrum {
        eigenvalues: tagged.into_iter().map(|t| t.0).collect(),
        decompositions,
    })
}

/// Dual objective `ψ(μ)` for a sorted spectrum.
pub fn dual_psi(mu: f64, eigenvalues: &[f64], power: f64, norm_d_sq: f64) -> Result<f64> {
    if mu < 0.0 || mu.is_nan() {
        return Err(Error::NegativeWaterLevel(mu));
    }
    Ok(psi(mu, eigenvalues, power, norm_d_sq))
}

fn psi(mu: f64, eigenvalues: &[f64], power: f64, norm_d_sq: f64) -> f64 {
    let clipped: f64 = eigenvalues
        .iter()
        .map(|&l| {
            let excess = (l - mu).max(0.0);
            excess * excess
        })
        .sum();
    -0.5 * clipped - mu * power + 0.5 * norm_d_sq
}

/// Result of the interval sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaterLevel {
    pub mu: f64,
    /// Number of leading eigenvalues above the water level at termination.
    pub active_index: usize,
}

/// Maximizes `ψ` over `μ ≥ 0` by walking the pieces between consecutive
/// eigenvalues.
///
/// Piece `Î` covers `[λ_{Î+1}, λ_Î] ∩ [0, ∞)` with `λ_0 = +∞` and
/// `λ_{n+1} = -∞`. On piece `Î ≥ 1` the stationary point is
/// `(Σ_{i ≤ Î} λ_i - P) / Î`; if it lies on the piece it is the global
/// maximizer, otherwise the lower endpoint is compared against the best
/// value so far and the sweep stops as soon as `ψ` starts to decrease.
pub fn water_level_search(eigenvalues: &[f64], power: f64) -> Result<WaterLevel> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::InvalidPower(power));
    }
    if eigenvalues.windows(2).any(|w| !(w[0] >= w[1])) || eigenvalues.iter().any(|l| !l.is_finite())
    {
        return Err(Error::UnsortedEigenvalues);
    }
    let n = eigenvalues.len();
    let lambda = |i: usize| -> f64 {
        match i {
            0 => f64::INFINITY,
            i if i > n => f64::NEG_INFINITY,
            i => eigenvalues[i - 1],
        }
    };
    let value = |mu: f64| psi(mu, eigenvalues, power, 0.0);
    let tol = INTERVAL_TOL * (1.0 + eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs())));

    // Piece 0 is [λ_1, ∞), where ψ decreases linearly; its best point is the
    // lower endpoint, which seeds the sweep.
    let mut mu_star = lambda(1).max(0.0);
    if n == 0 || lambda(1) <= 0.0 {
        return Ok(WaterLevel {
            mu: 0.0,
            active_index: 0,
        });
    }
    let mut best = value(mu_star);
    let mut prefix = 0.0;

    let mut index = 1;
    while index <= n {
        prefix += lambda(index);
        let hi = lambda(index);
        let lo = lambda(index + 1).max(0.0);
        let candidate = (prefix - power) / index as f64;
        if candidate >= lo - tol && candidate <= hi + tol {
            return Ok(WaterLevel {
                mu: candidate.clamp(lo, hi),
                active_index: index,
            });
        }
        let at_lo = value(lo);
        if at_lo < best {
            break;
        }
        mu_star = lo;
        best = at_lo;
        if lo <= 0.0 {
            // the non-negative half-line is exhausted
            break;
        }
        index += 1;
    }
    // ψ peaked at the breakpoint μ*; count the eigenvalues strictly above it
    let active_index = eigenvalues.iter().take_while(|&&l| l > mu_star).count();
    Ok(WaterLevel {
        mu: mu_star,
        active_index,
    })
}

#[derive(Clone, Debug)]
pub struct ProjectionOutcome {
    pub projected: CovarianceSet,
    pub water_level: f64,
    pub active_index: usize,
    pub dual_value: f64,
    pub trace_after: f64,
}

/// Projects Hermitian blocks (not necessarily PSD) onto the sum-power set.
pub fn project_sum_power(blocks: &[HermitianMatrix], power: f64) -> Result<ProjectionOutcome> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::InvalidPower(power));
    }
    let d = BlockDiagonal::new(blocks.to_vec())?;
    let spectrum = block_eigenvalues(&d)?;
    let level = water_level_search(&spectrum.eigenvalues, power)?;
    let mu = level.mu;
    let projected = CovarianceSet::new(
        spectrum
            .decompositions
            .iter()
            .map(|eig| eig.recompose_with(|l| (l - mu).max(0.0)))
            .collect(),
    );
    let trace_after = projected.total_trace();
    Ok(ProjectionOutcome {
        projected,
        water_level: mu,
        active_index: level.active_index,
        dual_value: psi(mu, &spectrum.eigenvalues, power, d.frobenius_norm_sq()),
        trace_after,
    })
}
