use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mwsr::channel::{generate_rayleigh_channels, write_instance, ProblemInstance};
use mwsr::experiment::{
    run_experiment, scaling_benchmark, Algorithm, ExperimentConfig, InstanceSource, Preset,
    WeightSpec, DEFAULT_POWER,
};
use mwsr::trace::RateUnit;
use mwsr::verify::{verify_projection, verify_theorem1, ProjectionCheck};
use mwsr::{OptimizerConfig, Result};

#[derive(Parser)]
#[command(
    name = "mwsr",
    version,
    about = "Maximum weighted sum rate of a MIMO broadcast channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve generated or loaded instances and write a convergence trace.
    Solve(SolveArgs),
    /// Check the ascending-weight objective against all decoding orders.
    VerifyTheorem1(Theorem1Args),
    /// Check the sum-power projection against brute-force oracles.
    VerifyProjection(ProjectionArgs),
    /// Time one CGP iteration across user counts.
    BenchScaling(BenchArgs),
    /// Write a Rayleigh instance as JSON.
    GenInstance(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Cgp,
    Gp,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

#[derive(Args)]
struct Dims {
    #[arg(long, default_value_t = 10)]
    users: usize,
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    power: Option<f64>,
    /// Comma-separated list or `equal`.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Cgp)]
    algorithm: AlgorithmArg,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, conflicts_with_all = ["users", "nt", "nr", "preset"])]
    instance: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UnitArg::Nats)]
    unit: UnitArg,
    /// `small10` or `large100`.
    #[arg(long, conflicts_with_all = ["users", "nt", "nr"])]
    preset: Option<String>,
    /// Record wall-clock time in the trace (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Theorem1Args {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Fixed weights; random per sample when omitted.
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args)]
struct ProjectionArgs {
    #[arg(long, default_value_t = 3)]
    users: usize,
    #[arg(long, default_value_t = 3)]
    nr: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1000)]
    competitors: usize,
    #[arg(long, default_value_t = mwsr::verify::GRID_POINTS)]
    grid_points: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Ascending comma-separated user counts.
    #[arg(long, default_value = "10,20,40,80,160")]
    users: String,
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value_t = DEFAULT_POWER)]
    power: f64,
    #[arg(long, default_value = "equal")]
    weights: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn solve(args: SolveArgs) -> Result<bool> {
    let mut config = match (&args.preset, &args.instance) {
        (Some(name), _) => ExperimentConfig::from_preset(Preset::parse(name)?),
        (None, Some(path)) => ExperimentConfig {
            source: InstanceSource::File(path.clone()),
            ..ExperimentConfig::generated(0, 0, 0)
        },
        (None, None) => ExperimentConfig::generated(
            args.users.unwrap_or(10),
            args.nt.unwrap_or(4),
            args.nr.unwrap_or(4),
        ),
    };
    if let Some(w) = &args.weights {
        config.weights = Some(WeightSpec::parse(w)?);
    }
    config.power = args.power;
    config.seed = args.seed;
    config.algorithm = match args.algorithm {
        AlgorithmArg::Cgp => Algorithm::Cgp,
        AlgorithmArg::Gp => Algorithm::Gp,
    };
    let defaults = OptimizerConfig::default();
    config.optimizer = OptimizerConfig {
        beta: args.beta.unwrap_or(defaults.beta),
        sigma: args.sigma.unwrap_or(defaults.sigma),
        epsilon: args.tol.unwrap_or(defaults.epsilon),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        record_timing: args.timing,
        ..defaults
    };
    config.output = args.out;
    config.repetitions = args.reps;
    config.unit = match args.unit {
        UnitArg::Nats => RateUnit::Nats,
        UnitArg::Bits => RateUnit::Bits,
    };

    let outcome = run_experiment(&config)?;
    for r in &outcome.runs {
        println!(
            "run {} seed {}: {} after {} iterations, objective {:.12}",
            r.run,
            r.seed,
            r.status.as_str(),
            r.iterations,
            r.final_objective
        );
    }
    Ok(outcome.all_converged())
}

fn theorem1(args: Theorem1Args) -> Result<bool> {
    let weights = args
        .weights
        .as_deref()
        .map(|w| WeightSpec::parse(w).map(|s| s.resolve(args.dims.users)))
        .transpose()?;
    let report = verify_theorem1(
        args.dims.users,
        args.dims.nt,
        args.dims.nr,
        args.seed,
        args.samples,
        weights.as_deref(),
    )?;
    println!(
        "samples {} max_discrepancy {:e} order_mismatches {}",
        report.samples, report.max_discrepancy, report.order_mismatches
    );
    Ok(report.passed())
}

fn projection(args: ProjectionArgs) -> Result<bool> {
    let check = ProjectionCheck {
        competitors: args.competitors,
        grid_points: args.grid_points,
        ..ProjectionCheck::new(args.users, args.nr, args.seed, args.samples)
    };
    let r = verify_projection(&check)?;
    println!("samples {}", r.samples);
    println!("competitor_margin {:e}", r.competitor_margin);
    println!("psi_gap {:e}", r.psi_gap);
    println!("idempotence {:e}", r.idempotence);
    println!("complementarity {:e}", r.complementarity);
    println!("identity_error {:e}", r.identity_error);
    println!("known_case_error {:e}", r.known_case_error);
    println!("all_feasible {}", r.all_feasible);
    Ok(r.passed())
}

fn bench(args: BenchArgs) -> Result<bool> {
    let counts = args
        .users
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| mwsr::Error::InvalidConfig(format!("bad user count {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = scaling_benchmark(&counts, args.nt, args.nr, args.iters, args.seed)?;
    let csv = report.to_csv();
    match &args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(slope) = report.slope {
        eprintln!("log-log slope {slope:.3}");
    }
    Ok(true)
}

fn gen_instance(args: GenArgs) -> Result<bool> {
    let channels =
        generate_rayleigh_channels(args.dims.users, args.dims.nt, args.dims.nr, args.seed)?;
    let weights = WeightSpec::parse(&args.weights)?.resolve(args.dims.users);
    let instance = ProblemInstance::new(channels, &weights, args.power, "generated")?;
    write_instance(&instance, &args.out)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::VerifyTheorem1(a) => theorem1(a),
        Command::VerifyProjection(a) => projection(a),
        Command::BenchScaling(a) => bench(a),
        Command::GenInstance(a) => gen_instance(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
