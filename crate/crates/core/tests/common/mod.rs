#![allow(dead_code)]

use mwsr::channel::{
    evaluate_objective, generate_rayleigh_channels, ChannelSet, CovarianceSet, ProblemInstance,
};
use mwsr::hermitian::{ComplexMatrix, HermitianMatrix, C64};

pub const TEN_USER_WEIGHTS: [f64; 10] = [1.0, 1.5, 0.8, 0.9, 1.4, 1.2, 0.7, 1.1, 1.03, 1.3];

pub fn rayleigh(
    users: usize,
    nt: usize,
    nr: usize,
    seed: u64,
    weights: &[f64],
    power: f64,
) -> ProblemInstance {
    let channels = generate_rayleigh_channels(users, nt, nr, seed).unwrap();
    ProblemInstance::new(channels, weights, power, "test").unwrap()
}

/// Single-user capacity by eigenmode water-filling on the singular values
/// of `H`, with the water level found by bisection.
pub fn water_filling_capacity(channels: &ChannelSet, power: f64) -> f64 {
    let h = channels.channel(0);
    let gains: Vec<f64> = h
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s * s)
        .filter(|&g| g > 1e-300)
        .collect();
    let used = |nu: f64| gains.iter().map(|g| (nu - 1.0 / g).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (
        0.0,
        power + gains.iter().map(|g| 1.0 / g).fold(0.0, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) > power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    gains
        .iter()
        .map(|g| (1.0 + g * (nu - 1.0 / g).max(0.0)).ln())
        .sum()
}

/// `ln det` through nalgebra's LU, independent of the library's Cholesky.
pub fn naive_logdet(m: &ComplexMatrix) -> f64 {
    m.clone().lu().determinant().re.ln()
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Central-difference reconstruction of every gradient block. Diagonal
/// entries carry a factor 2 and off-diagonal entries combine the real and
/// imaginary Hermitian pair perturbations.
pub fn fd_gradient(instance: &ProblemInstance, q: &CovarianceSet, h: f64) -> Vec<ComplexMatrix> {
    let f = |blocks: &CovarianceSet| evaluate_objective(instance, blocks).unwrap();
    let nr = instance.nr();
    let mut out = Vec::new();
    for user in 0..instance.users() {
        let mut g = ComplexMatrix::zeros(nr, nr);
        let bump = |e: ComplexMatrix| -> f64 {
            let mut plus = q.clone();
            let mut minus = q.clone();
            plus.blocks[user] =
                HermitianMatrix::new(q.blocks[user].as_matrix() + e.scale(h)).unwrap();
            minus.blocks[user] =
                HermitianMatrix::new(q.blocks[user].as_matrix() - e.scale(h)).unwrap();
            (f(&plus) - f(&minus)) / (2.0 * h)
        };
        for a in 0..nr {
            for b in a..nr {
                let mut re = ComplexMatrix::zeros(nr, nr);
                re[(a, b)] = C64::new(1.0, 0.0);
                re[(b, a)] = C64::new(1.0, 0.0);
                if a == b {
                    re[(a, a)] = C64::new(1.0, 0.0);
                    g[(a, a)] = C64::new(2.0 * bump(re), 0.0);
                    continue;
                }
                let mut im = ComplexMatrix::zeros(nr, nr);
                im[(a, b)] = C64::new(0.0, 1.0);
                im[(b, a)] = C64::new(0.0, -1.0);
                let dx = bump(re);
                let dy = bump(im);
                g[(a, b)] = C64::new(dx, dy);
                g[(b, a)] = C64::new(dx, -dy);
            }
        }
        out.push(g);
    }
    out
}

/// Worst relative Frobenius error of the analytic gradient blocks against
/// the central differences at step `1e-5`.
pub fn gradient_fd_error(instance: &ProblemInstance, q: &CovarianceSet) -> f64 {
    let grad = mwsr::cgp::weighted_gradients(instance, q).unwrap();
    grad.blocks
        .iter()
        .zip(fd_gradient(instance, q, 1e-5))
        .map(|(g, fd)| (g.as_matrix() - &fd).norm() / g.as_matrix().norm())
        .fold(0.0, f64::max)
}
