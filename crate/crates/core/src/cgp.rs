//! Conjugate gradient projection for the weighted sum-rate problem.
//!
//! Each iteration computes the weighted gradient of the objective, forms the
//! projected-gradient step `r = (P(Q + sG) - Q) / s`, deflects it
//! Fletcher–Reeves style, projects `Q + s * direction` back onto the
//! sum-power set and then backtracks along the segment towards the projected
//! point with the Armijo rule.
//!
//! Deflection works on `r` rather than on the raw gradient: the raw gradient
//! carries a large multiple of the identity that the projection absorbs into
//! the water level, which pins the Fletcher–Reeves ratio near one.

use std::time::Instant;

use crate::channel::{evaluate_objective, feasibility_check, CovarianceSet, ProblemInstance};
use crate::error::{Error, Result};
use crate::hermitian::{inverse_hpd, HermitianMatrix};
use crate::projection::project_sum_power;

const MIN_TRIAL_STEP: f64 = 1e-8;
const MAX_TRIAL_STEP: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Armijo contraction factor, `0 < beta < 1`.
    pub beta: f64,
    /// Armijo slope fraction, `0 < sigma < 1`.
    pub sigma: f64,
    /// Stop once the largest elementwise change of `Q` falls below this.
    pub epsilon: f64,
    pub max_iters: usize,
    pub max_armijo_trials: usize,
    /// Fletcher–Reeves deflection; `false` gives plain gradient projection.
    pub deflection: bool,
    /// Iterations between conjugacy restarts; `None` means `K * nr^2`.
    pub reset_period: Option<usize>,
    /// Trial step `s` for the first iteration.
    pub initial_step: f64,
    /// Double `s` after a full Armijo step and shrink it by `beta^m` after
    /// backtracking. With `false`, `s` stays at `initial_step`.
    pub adaptive_step: bool,
    /// Fill `elapsed_ms` with wall-clock time. Off by default so traces are
    /// reproducible bit for bit.
    pub record_timing: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            sigma: 0.1,
            epsilon: 1e-6,
            max_iters: 1000,
            max_armijo_trials: 40,
            deflection: true,
            reset_period: None,
            initial_step: 1.0,
            adaptive_step: true,
            record_timing: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )))
            }
        };
        unit("beta", self.beta)?;
        unit("sigma", self.sigma)?;
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 || self.max_armijo_trials == 0 || self.reset_period == Some(0) {
            return Err(Error::InvalidConfig(
                "iteration limits and reset period must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One Hermitian `nr x nr` matrix per user, in original user order.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub blocks: Vec<HermitianMatrix>,
}

impl GradientSet {
    pub fn norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(HermitianMatrix::frobenius_norm_sq)
            .sum()
    }

    /// `Re Σ_i Tr[G_i† (A_i - B_i)]`
    pub fn slope_towards(&self, a: &CovarianceSet, b: &CovarianceSet) -> f64 {
        self.blocks
            .iter()
            .zip(a.blocks.iter().zip(&b.blocks))
            .map(|(g, (x, y))| g.inner(&x.sub(y)))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective after the update, nats.
    pub objective: f64,
    /// Frobenius norm of the stacked (undeflected) gradient.
    pub grad_norm: f64,
    pub armijo_m: usize,
    pub water_level: f64,
    pub max_delta: f64,
    /// Milliseconds since the solve started; zero unless timing is recorded.
    pub elapsed_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchStalled,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::LineSearchStalled => "line_search_stalled",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub covariances: CovarianceSet,
    pub trace: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub final_objective: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Gradient of the objective with respect to every `Q_i`:
///
/// ```text
/// G_π(j) = 2 H_π(j) [ Σ_{i ≤ j} d_i (I + Σ_{k ≥ i} H†QH)^{-1} ] H_π(j)†
/// ```
///
/// The inner sums come from one pass down the ascending order, and the
/// weighted inverse sum grows by one term per position on the way back up.
pub fn weighted_gradients(instance: &ProblemInstance, q: &CovarianceSet) -> Result<GradientSet> {
    let sums = instance.running_sums(q)?;
    let nt = instance.nt();
    let mut weighted_inverse = HermitianMatrix::zeros(nt);
    let mut blocks = vec![HermitianMatrix::zeros(instance.nr()); instance.users()];
    for (pos, &user) in instance.weights.permutation.iter().enumerate() {
        let d = instance.weights.diffs[pos];
        if d != 0.0 {
            weighted_inverse = weighted_inverse.add_scaled(&inverse_hpd(&sums[pos])?, d);
        }
        let h = instance.channels.channel(user);
        let g = h * weighted_inverse.as_matrix() * h.adjoint();
        blocks[user] = HermitianMatrix::from_square_unchecked(g.scale(2.0));
    }
    Ok(GradientSet { blocks })
}

/// Fletcher–Reeves deflection with one ratio per user block. Blocks whose
/// previous gradient vanished are left undeflected.
pub fn deflect(
    current: &GradientSet,
    previous_grad: &GradientSet,
    previous_dir: &GradientSet,
) -> GradientSet {
    let blocks = current
        .blocks
        .iter()
        .zip(previous_grad.blocks.iter().zip(&previous_dir.blocks))
        .map(|(g, (g_prev, dir_prev))| {
            let denom = g_prev.frobenius_norm_sq();
            if denom > 0.0 {
                g.add_scaled(dir_prev, g.frobenius_norm_sq() / denom)
            } else {
                g.clone()
            }
        })
        .collect();
    GradientSet { blocks }
}

#[derive(Clone, Debug)]
pub struct ArmijoStep {
    pub alpha: f64,
    pub m: usize,
    pub accepted: CovarianceSet,
    pub objective: f64,
}

/// Smallest `m ≥ 0` with
/// `F(Q + β^m (Q̄ - Q)) - F(Q) ≥ σ β^m Re Σ Tr[G_i† (Q̄_i - Q_i)]`.
pub fn armijo_step(
    instance: &ProblemInstance,
    q: &CovarianceSet,
    reference_grad: &GradientSet,
    target: &CovarianceSet,
    config: &OptimizerConfig,
) -> Result<ArmijoStep> {
    let current = evaluate_objective(instance, q)?;
    let slope = reference_grad.slope_towards(target, q);
    backtrack(instance, q, current, slope, target, config)
}

fn backtrack(
    instance: &ProblemInstance,
    q: &CovarianceSet,
    current: f64,
    slope: f64,
    target: &CovarianceSet,
    config: &OptimizerConfig,
) -> Result<ArmijoStep> {
    let direction: Vec<HermitianMatrix> = target
        .blocks
        .iter()
        .zip(&q.blocks)
        .map(|(t, x)| t.sub(x))
        .collect();
    let mut alpha = 1.0;
    for m in 0..config.max_armijo_trials {
        let trial = CovarianceSet::new(
            q.blocks
                .iter()
                .zip(&direction)
                .map(|(x, d)| x.add_scaled(d, alpha))
                .collect(),
        );
        let value = evaluate_objective(instance, &trial)?;
        if value - current >= config.sigma * alpha * slope {
            return Ok(ArmijoStep {
                alpha,
                m,
                accepted: trial,
                objective: value,
            });
        }
        alpha *= config.beta;
    }
    Err(Error::LineSearchStalled {
        trials: config.max_armijo_trials,
    })
}

/// Runs conjugate gradient projection from `q0`, or from the uniform
/// allocation `(P / (K nr)) I` when none is given.
pub fn cgp_solve(
    instance: &ProblemInstance,
    config: &OptimizerConfig,
    q0: Option<&CovarianceSet>,
) -> Result<SolveResult> {
    config.validate()?;
    let mut q = match q0 {
        Some(start) => {
            instance.check_covariances(start)?;
            if !feasibility_check(start, instance.power).feasible {
                return Err(Error::InvalidConfig(
                    "initial covariances are infeasible".into(),
                ));
            }
            start.clone()
        }
        None => CovarianceSet::uniform(instance.users(), instance.nr(), instance.power),
    };
    let reset_period = config
        .reset_period
        .unwrap_or(instance.users() * instance.nr() * instance.nr())
        .max(1);
    let clock = Instant::now();
    let mut objective = evaluate_objective(instance, &q)?;
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIters;

    let mut step_size = config.initial_step;
    let mut previous: Option<(GradientSet, GradientSet)> = None;

    for k in 0..config.max_iters {
        let grad = weighted_gradients(instance, &q)?;
        let shifted = |dir: &GradientSet| -> Vec<HermitianMatrix> {
            q.blocks
                .iter()
                .zip(&dir.blocks)
                .map(|(x, g)| x.add_scaled(g, step_size))
                .collect()
        };

        let plain = project_sum_power(&shifted(&grad), instance.power)?;
        let mapping = GradientSet {
            blocks: plain
                .projected
                .blocks
                .iter()
                .zip(&q.blocks)
                .map(|(p, x)| p.sub(x).scale(1.0 / step_size))
                .collect(),
        };

        let deflected = match &previous {
            Some((map_prev, dir_prev)) if config.deflection && k % reset_period != 0 => {
                let dir = deflect(&mapping, map_prev, dir_prev);
                let outcome = project_sum_power(&shifted(&dir), instance.power)?;
                let slope = grad.slope_towards(&outcome.projected, &q);
                // restart when deflection loses the ascent property
                (slope > 0.0).then_some((dir, outcome, slope))
            }
            _ => None,
        };
        let (direction, outcome, slope) = match deflected {
            Some(found) => found,
            None => {
                let slope = grad.slope_towards(&plain.projected, &q);
                (mapping.clone(), plain, slope)
            }
        };

        let step = match backtrack(instance, &q, objective, slope, &outcome.projected, config) {
            Ok(step) => step,
            Err(Error::LineSearchStalled { .. }) => {
                status = SolveStatus::LineSearchStalled;
                break;
            }
            Err(e) => return Err(e),
        };

        let max_delta = step.accepted.max_abs_diff(&q);
        trace.push(IterationRecord {
            iter: k + 1,
            objective: step.objective,
            grad_norm: grad.norm_sq().sqrt(),
            armijo_m: step.m,
            water_level: outcome.water_level,
            max_delta,
            elapsed_ms: if config.record_timing {
                clock.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
        if config.adaptive_step {
            step_size = if step.m == 0 {
                step_size * 2.0
            } else {
                step_size * config.beta.powi(step.m as i32)
            }
            .clamp(MIN_TRIAL_STEP, MAX_TRIAL_STEP);
        }
        q = step.accepted;
        objective = step.objective;
        previous = Some((mapping, direction));
        if max_delta < config.epsilon {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SolveResult {
        covariances: q,
        trace,
        status,
        final_objective: objective,
    })
}

/// Gradient projection without deflection; the baseline solver.
pub fn gp_solve(
    instance: &ProblemInstance,
    config: &OptimizerConfig,
    q0: Option<&CovarianceSet>,
) -> Result<SolveResult> {
    let plain = OptimizerConfig {
        deflection: false,
        ..config.clone()
    };
    cgp_solve(instance, &plain, q0)
}
