//! One line per acceptance criterion, `PASS` or `FAIL`. Runs without the
//! libtest harness so the table is always printed; exits non-zero if any
//! criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{gradient_fd_error, rayleigh, relative, water_filling_capacity, TEN_USER_WEIGHTS};
use mwsr::channel::CovarianceSet;
use mwsr::experiment::{run_experiment, scaling_benchmark, ExperimentConfig, Preset};
use mwsr::sampling::{random_feasible_blocks, random_psd};
use mwsr::trace::objective_monotone;
use mwsr::verify::{verify_projection, verify_theorem1, ProjectionCheck};
use mwsr::{cgp_solve, gp_solve, OptimizerConfig, SolveStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn criterion(id: u32, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = check();
    println!(
        "[{}] criterion {id} {name}: {} ({:.1} s)",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.detail,
        start.elapsed().as_secs_f64()
    );
    outcome.passed
}

fn theorem1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for users in 1..=4 {
        let report = verify_theorem1(users, 2, 2, 100 + users as u64, 100, None).unwrap();
        worst = worst.max(report.max_discrepancy);
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: worst <= 1e-9 && elapsed <= Duration::from_secs(10),
        detail: format!(
            "max discrepancy {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn projection() -> Outcome {
    let start = Instant::now();
    let r = verify_projection(&ProjectionCheck::new(3, 3, 2024, 500)).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        passed: r.passed() && elapsed <= Duration::from_secs(60),
        detail: format!(
            "margin {:.2e}, psi gap {:.2e}, idempotence {:.2e}, slackness {:.2e}, {:.1} s",
            r.competitor_margin,
            r.psi_gap,
            r.idempotence,
            r.complementarity,
            elapsed.as_secs_f64()
        ),
    }
}

fn gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let instance = rayleigh(3, 3, 3, 300 + seed, &[1.3, 0.4, 0.9], 10.0);
        let q = CovarianceSet::new(
            (0..3)
                .map(|_| random_psd(&mut rng, 3, 3).scale(0.5))
                .collect(),
        );
        worst = worst.max(gradient_fd_error(&instance, &q));
    }
    Outcome {
        passed: worst <= 1e-5,
        detail: format!("worst relative error {worst:.2e}"),
    }
}

fn single_user() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut converged = true;
    for seed in 0..20 {
        let instance = rayleigh(1, 4, 4, seed, &[1.0], 10.0);
        let result = cgp_solve(&instance, &OptimizerConfig::default(), None).unwrap();
        converged &= result.status == SolveStatus::Converged;
        worst = worst.max(relative(
            result.final_objective,
            water_filling_capacity(&instance.channels, 10.0),
        ));
    }
    Outcome {
        passed: converged && worst <= 1e-6,
        detail: format!("worst relative gap {worst:.2e}"),
    }
}

fn small_system() -> Outcome {
    let mut config = ExperimentConfig::from_preset(Preset::Small10);
    config.repetitions = 20;
    let outcome = run_experiment(&config).unwrap();
    let mut iters: Vec<usize> = outcome.runs.iter().map(|r| r.iterations).collect();
    iters.sort_unstable();
    let median = (iters[9] + iters[10]) as f64 / 2.0;
    let max = *iters.last().unwrap();
    let monotone = objective_monotone(&outcome.rows, 0.0);
    Outcome {
        passed: outcome.all_converged() && max <= 200 && median <= 100.0 && monotone,
        detail: format!(
            "iterations {}..={max}, median {median}, monotone {monotone}",
            iters[0]
        ),
    }
}

fn large_system() -> Outcome {
    let start = Instant::now();
    let outcome = run_experiment(&ExperimentConfig::from_preset(Preset::Large100)).unwrap();
    let elapsed = start.elapsed();
    let iters = outcome.runs[0].iterations;
    Outcome {
        passed: outcome.all_converged() && iters <= 200 && elapsed <= Duration::from_secs(300),
        detail: format!("{iters} iterations, {:.2} s", elapsed.as_secs_f64()),
    }
}

fn value_uniqueness() -> Outcome {
    let config = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut start_spread, mut gp_gap): (f64, f64) = (0.0, 0.0);
    for seed in 0..20 {
        let instance = rayleigh(10, 4, 4, seed, &TEN_USER_WEIGHTS, 10.0);
        let values: Vec<f64> = (0..5)
            .map(|_| {
                let start = CovarianceSet::new(random_feasible_blocks(&mut rng, 10, 4, 10.0));
                cgp_solve(&instance, &config, Some(&start))
                    .unwrap()
                    .final_objective
            })
            .collect();
        let hi = values.iter().copied().fold(f64::MIN, f64::max);
        let lo = values.iter().copied().fold(f64::MAX, f64::min);
        start_spread = start_spread.max(relative(lo, hi));
        let cgp = cgp_solve(&instance, &config, None).unwrap().final_objective;
        let gp = gp_solve(&instance, &config, None).unwrap().final_objective;
        gp_gap = gp_gap.max(relative(gp, cgp));
    }
    Outcome {
        passed: start_spread <= 1e-5 && gp_gap <= 1e-4,
        detail: format!("multi-start spread {start_spread:.2e}, gp vs cgp {gp_gap:.2e}"),
    }
}

fn scaling() -> Outcome {
    let report = scaling_benchmark(&[10, 20, 40, 80, 160], 4, 4, 20, 0).unwrap();
    let slope = report.slope.unwrap();
    let table: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("K={} {:.3} ms", r.users, r.ms_per_iter))
        .collect();
    Outcome {
        passed: slope <= 1.3,
        detail: format!("log-log slope {slope:.3} [{}]", table.join(", ")),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let traces: Vec<Vec<u8>> = ["first.csv", "second.csv"]
        .iter()
        .map(|name| {
            let path = dir.path().join(name);
            let status = Command::new(env!("CARGO_BIN_EXE_mwsr"))
                .args([
                    "solve", "--preset", "small10", "--seed", "9", "--reps", "3", "--out",
                ])
                .arg(&path)
                .output()
                .unwrap()
                .status;
            assert!(status.success());
            std::fs::read(&path).unwrap()
        })
        .collect();
    Outcome {
        passed: !traces[0].is_empty() && traces[0] == traces[1],
        detail: format!(
            "{} bytes, identical {}",
            traces[0].len(),
            traces[0] == traces[1]
        ),
    }
}

fn main() {
    let results = [
        criterion(1, "decoding-order equivalence", theorem1),
        criterion(2, "projection exactness", projection),
        criterion(3, "gradient vs finite differences", gradient),
        criterion(4, "single-user water-filling", single_user),
        criterion(5, "10-user convergence", small_system),
        criterion(6, "100-user convergence", large_system),
        criterion(7, "value uniqueness", value_uniqueness),
        criterion(8, "linear per-iteration cost", scaling),
        criterion(9, "deterministic CLI traces", determinism),
    ];
    let failed: Vec<usize> = (1..=9).filter(|&i| !results[i - 1]).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
