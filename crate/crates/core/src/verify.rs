//! Brute-force checks behind the `verify-*` commands: the decoding-order
//! enumeration for the weighted objective, and the sampled-competitor and
//! dense μ-grid checks for the sum-power projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    evaluate_objective, feasibility_check, generate_rayleigh_channels, ordering_oracle,
    CovarianceSet, ProblemInstance, ORACLE_MAX_USERS,
};
use crate::error::{Error, Result};
use crate::hermitian::{psd_part, HermitianMatrix};
use crate::projection::{block_eigenvalues, dual_psi, project_sum_power, BlockDiagonal};
use crate::sampling::{random_feasible_blocks, random_hermitian};

pub const THEOREM1_TOL: f64 = 1e-9;
pub const GRID_POINTS: usize = 10_000_000;

#[derive(Clone, Debug)]
pub struct Theorem1Report {
    pub samples: usize,
    pub max_discrepancy: f64,
    /// Samples where the best enumerated order was not the ascending-weight
    /// one. Informational: zero blocks make orders tie.
    pub order_mismatches: usize,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.max_discrepancy <= THEOREM1_TOL
    }
}

/// Compares the ascending-order objective against exhaustive enumeration
/// of decoding orders on random instances and random feasible covariances.
/// `weights = None` draws fresh weights in `[0, 2)` per sample.
pub fn verify_theorem1(
    users: usize,
    nt: usize,
    nr: usize,
    seed: u64,
    samples: usize,
    weights: Option<&[f64]>,
) -> Result<Theorem1Report> {
    if users > ORACLE_MAX_USERS {
        return Err(Error::TooManyUsers {
            users,
            limit: ORACLE_MAX_USERS,
        });
    }
    let power = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_discrepancy: f64 = 0.0;
    let mut order_mismatches = 0;
    for _ in 0..samples {
        let channels = generate_rayleigh_channels(users, nt, nr, rng.random())?;
        let w: Vec<f64> = match weights {
            Some(w) => w.to_vec(),
            None => (0..users).map(|_| rng.random_range(0.0..2.0)).collect(),
        };
        let instance = ProblemInstance::new(channels, &w, power, "theorem1")?;
        let q = CovarianceSet::new(random_feasible_blocks(&mut rng, users, nr, power));
        let direct = evaluate_objective(&instance, &q)?;
        let (best, order) = ordering_oracle(&instance, &q)?;
        max_discrepancy = max_discrepancy.max((direct - best).abs());
        // users with zero covariance or equal weights tie, so other orders can win by rounding
        let ascending = order.windows(2).all(|p| w[p[0]] <= w[p[1]]);
        if !ascending {
            order_mismatches += 1;
        }
    }
    Ok(Theorem1Report {
        samples,
        max_discrepancy,
        order_mismatches,
    })
}

/// Maximizes `ψ` over a uniform grid on `[0, λ_max]` plus every non-negative
/// breakpoint. Evaluation walks the grid upward with prefix sums of the
/// sorted spectrum, so each point costs O(1). Returns `(μ, ψ(μ))`.
pub fn grid_maximize_psi(
    eigenvalues: &[f64],
    power: f64,
    norm_d_sq: f64,
    points: usize,
) -> (f64, f64) {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for i in 0..n {
        s1[i + 1] = s1[i] + sorted[i];
        s2[i + 1] = s2[i] + sorted[i] * sorted[i];
    }
    // count of eigenvalues strictly above μ shrinks as μ grows
    let mut above = n;
    let eval = |mu: f64, above: &mut usize| -> f64 {
        while *above > 0 && sorted[*above - 1] <= mu {
            *above -= 1;
        }
        let c = *above as f64;
        let clipped = s2[*above] - 2.0 * mu * s1[*above] + c * mu * mu;
        -0.5 * clipped - mu * power + 0.5 * norm_d_sq
    };

    let top = sorted.first().copied().unwrap_or(0.0).max(0.0);
    let mut candidates: Vec<f64> = sorted.iter().copied().filter(|&l| l >= 0.0).collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut next_breakpoint = 0;
    let steps = points.max(2) - 1;
    for i in 0..=steps {
        let mu = top * i as f64 / steps as f64;
        while next_breakpoint < candidates.len() && candidates[next_breakpoint] <= mu {
            let b = candidates[next_breakpoint];
            let v = eval(b, &mut above);
            if v > best.1 {
                best = (b, v);
            }
            next_breakpoint += 1;
        }
        let v = eval(mu, &mut above);
        if v > best.1 {
            best = (mu, v);
        }
    }
    best
}

/// Worst-case margins over the projection checks; every field is oriented
/// so that smaller is better except `competitor_margin`, which must stay
/// non-negative.
#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub samples: usize,
    /// Smallest `‖Z - D‖_F - ‖D̃ - D‖_F` over all sampled feasible `Z`.
    pub competitor_margin: f64,
    /// Largest `|ψ_grid - ψ(μ*)|`.
    pub psi_gap: f64,
    /// Largest elementwise change when projecting the projection again.
    pub idempotence: f64,
    /// Largest `|μ* (Tr D̃ - P)|`.
    pub complementarity: f64,
    /// Largest elementwise change when projecting an already feasible point.
    pub identity_error: f64,
    /// Error on the single-block `diag(2, -1)`, `P = 1` case (`μ* = 1`).
    pub known_case_error: f64,
    pub all_feasible: bool,
}

pub const COMPETITOR_MARGIN_TOL: f64 = 0.0;
pub const PSI_TOL: f64 = 1e-9;
pub const IDEMPOTENCE_TOL: f64 = 1e-10;
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;

impl ProjectionReport {
    pub fn passed(&self) -> bool {
        self.competitor_margin >= COMPETITOR_MARGIN_TOL
            && self.psi_gap <= PSI_TOL
            && self.idempotence <= IDEMPOTENCE_TOL
            && self.complementarity <= COMPLEMENTARITY_TOL
            && self.identity_error <= IDEMPOTENCE_TOL
            && self.known_case_error <= 1e-12
            && self.all_feasible
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionCheck {
    pub users: usize,
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
    pub competitors: usize,
    pub grid_points: usize,
}

impl ProjectionCheck {
    pub fn new(users: usize, dim: usize, seed: u64, samples: usize) -> Self {
        Self {
            users,
            dim,
            seed,
            samples,
            competitors: 1000,
            grid_points: GRID_POINTS,
        }
    }
}

/// Sampled competitors: half drawn uniformly from the feasible set, half
/// local perturbations of the projection pushed back inside.
fn competitors(
    rng: &mut ChaCha8Rng,
    anchor: &CovarianceSet,
    count: usize,
    power: f64,
) -> Result<Vec<CovarianceSet>> {
    let users = anchor.len();
    let dim = anchor.blocks[0].dim();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        if i % 2 == 0 {
            out.push(CovarianceSet::new(random_feasible_blocks(
                rng, users, dim, power,
            )));
            continue;
        }
        let radius = 10f64.powf(rng.random_range(-4.0..0.0));
        let blocks = anchor
            .blocks
            .iter()
            .map(|b| psd_part(&b.add(&random_hermitian(rng, dim, radius))))
            .collect::<Result<Vec<_>>>()?;
        let mut z = CovarianceSet::new(blocks);
        let trace = z.total_trace();
        if trace > power {
            z = z.scale(power / trace);
        }
        out.push(z);
    }
    Ok(out)
}

pub fn verify_projection(check: &ProjectionCheck) -> Result<ProjectionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let mut report = ProjectionReport {
        samples: check.samples,
        competitor_margin: f64::INFINITY,
        psi_gap: 0.0,
        idempotence: 0.0,
        complementarity: 0.0,
        identity_error: 0.0,
        known_case_error: 0.0,
        all_feasible: true,
    };

    let known = project_sum_power(&[HermitianMatrix::from_real_diagonal(&[2.0, -1.0])], 1.0)?;
    report.known_case_error = (known.water_level - 1.0).abs().max(
        known.projected.blocks[0].max_abs_diff(&HermitianMatrix::from_real_diagonal(&[1.0, 0.0])),
    );

    for _ in 0..check.samples {
        let power = rng.random_range(0.5..5.0);
        let scale = rng.random_range(0.2..2.0);
        let input: Vec<HermitianMatrix> = (0..check.users)
            .map(|_| random_hermitian(&mut rng, check.dim, scale))
            .collect();
        let d = CovarianceSet::new(input.clone());
        let out = project_sum_power(&input, power)?;
        let own = out.projected.frobenius_distance(&d);

        for z in competitors(&mut rng, &out.projected, check.competitors, power)? {
            report.competitor_margin = report.competitor_margin.min(z.frobenius_distance(&d) - own);
        }

        let diag = BlockDiagonal::new(input)?;
        let spectrum = block_eigenvalues(&diag)?;
        let norm_sq = diag.frobenius_norm_sq();
        let at_star = dual_psi(out.water_level, &spectrum.eigenvalues, power, norm_sq)?;
        let (_, grid_best) =
            grid_maximize_psi(&spectrum.eigenvalues, power, norm_sq, check.grid_points);
        report.psi_gap = report.psi_gap.max((grid_best - at_star).abs());

        let again = project_sum_power(&out.projected.blocks, power)?;
        report.idempotence = report
            .idempotence
            .max(again.projected.max_abs_diff(&out.projected));
        report.complementarity = report
            .complementarity
            .max((out.water_level * (out.trace_after - power)).abs());
        report.all_feasible &= feasibility_check(&out.projected, power).feasible;

        let member = CovarianceSet::new(random_feasible_blocks(
            &mut rng,
            check.users,
            check.dim,
            power,
        ));
        let fixed = project_sum_power(&member.blocks, power)?;
        report.identity_error = report
            .identity_error
            .max(fixed.projected.max_abs_diff(&member));
    }
    Ok(report)
}
