//! Solver runs driven from the command line: repeated solves with trace
//! output, and the per-iteration scaling benchmark.

use std::path::PathBuf;
use std::time::Instant;

use crate::cgp::{cgp_solve, gp_solve, OptimizerConfig, SolveResult, SolveStatus};
use crate::channel::{generate_rayleigh_channels, read_instance, ProblemInstance};
use crate::error::{Error, Result};
use crate::trace::{write_trace, RateUnit, TraceRow};

pub const DEFAULT_POWER: f64 = 10.0;

/// Weights of the ten-user convergence example.
pub const TEN_USER_WEIGHTS: [f64; 10] = [1.0, 1.5, 0.8, 0.9, 1.4, 1.2, 0.7, 1.1, 1.03, 1.3];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Algorithm {
    #[default]
    Cgp,
    Gp,
}

impl Algorithm {
    pub fn solve(
        self,
        instance: &ProblemInstance,
        config: &OptimizerConfig,
    ) -> Result<SolveResult> {
        match self {
            Algorithm::Cgp => cgp_solve(instance, config, None),
            Algorithm::Gp => gp_solve(instance, config, None),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generated { users: usize, nt: usize, nr: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Equal,
    List(Vec<f64>),
}

impl WeightSpec {
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().eq_ignore_ascii_case("equal") {
            return Ok(WeightSpec::Equal);
        }
        text.split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad weight {w:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(WeightSpec::List)
    }

    pub fn resolve(&self, users: usize) -> Vec<f64> {
        match self {
            WeightSpec::Equal => vec![1.0; users],
            WeightSpec::List(w) => w.clone(),
        }
    }
}

/// Named experiment setups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Ten users, four antennas on each side, the ten-user weight list.
    Small10,
    /// One hundred users, four antennas on each side, equal weights.
    Large100,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "small10" => Ok(Preset::Small10),
            "large100" => Ok(Preset::Large100),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }

    pub fn source(self) -> InstanceSource {
        match self {
            Preset::Small10 => InstanceSource::Generated {
                users: 10,
                nt: 4,
                nr: 4,
            },
            Preset::Large100 => InstanceSource::Generated {
                users: 100,
                nt: 4,
                nr: 4,
            },
        }
    }

    pub fn weights(self) -> WeightSpec {
        match self {
            Preset::Small10 => WeightSpec::List(TEN_USER_WEIGHTS.to_vec()),
            Preset::Large100 => WeightSpec::Equal,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    /// Overrides the file's budget; generated instances default to 10.
    pub power: Option<f64>,
    /// `None` keeps the file's weights, or equal weights when generating.
    pub weights: Option<WeightSpec>,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub optimizer: OptimizerConfig,
    pub output: Option<PathBuf>,
    pub repetitions: usize,
    pub unit: RateUnit,
}

impl ExperimentConfig {
    pub fn generated(users: usize, nt: usize, nr: usize) -> Self {
        Self {
            source: InstanceSource::Generated { users, nt, nr },
            power: None,
            weights: None,
            seed: 0,
            algorithm: Algorithm::Cgp,
            optimizer: OptimizerConfig::default(),
            output: None,
            repetitions: 1,
            unit: RateUnit::Nats,
        }
    }

    pub fn from_preset(preset: Preset) -> Self {
        let mut config = Self::generated(0, 0, 0);
        config.source = preset.source();
        config.weights = Some(preset.weights());
        config
    }

    /// The instance solved by repetition `run`.
    pub fn instance(&self, run: usize) -> Result<ProblemInstance> {
        let seed = self.seed + run as u64;
        match &self.source {
            InstanceSource::File(path) => {
                let mut instance = read_instance(path)?;
                if self.power.is_some() || self.weights.is_some() {
                    let weights = match &self.weights {
                        Some(spec) => spec.resolve(instance.users()),
                        None => instance.weights.weights.clone(),
                    };
                    let power = self.power.unwrap_or(instance.power);
                    instance =
                        ProblemInstance::new(instance.channels, &weights, power, instance.label)?;
                }
                Ok(instance)
            }
            &InstanceSource::Generated { users, nt, nr } => {
                let channels = generate_rayleigh_channels(users, nt, nr, seed)?;
                let weights = self
                    .weights
                    .as_ref()
                    .unwrap_or(&WeightSpec::Equal)
                    .resolve(users);
                let label = format!("rayleigh-K{users}-nt{nt}-nr{nr}-s{seed}");
                ProblemInstance::new(
                    channels,
                    &weights,
                    self.power.unwrap_or(DEFAULT_POWER),
                    label,
                )
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Final objective in the configured unit.
    pub final_objective: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub runs: Vec<RunSummary>,
    pub rows: Vec<TraceRow>,
    pub csv: String,
}

impl ExperimentOutcome {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.status == SolveStatus::Converged)
    }
}

/// Solves `repetitions` instances (seeds `seed, seed + 1, ...`) and
/// collects every iteration into one trace, written to `output` if set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if config.repetitions == 0 {
        return Err(Error::InvalidConfig(
            "repetitions must be at least 1".into(),
        ));
    }
    let mut runs = Vec::with_capacity(config.repetitions);
    let mut rows = Vec::new();
    for run in 0..config.repetitions {
        let seed = config.seed + run as u64;
        let instance = config.instance(run)?;
        let result = config.algorithm.solve(&instance, &config.optimizer)?;
        rows.extend(
            result
                .trace
                .iter()
                .map(|rec| TraceRow::from_record(run, seed, rec, config.unit)),
        );
        runs.push(RunSummary {
            run,
            seed,
            status: result.status,
            iterations: result.iterations(),
            final_objective: config.unit.convert(result.final_objective),
        });
    }
    let csv = write_trace(&rows);
    if let Some(path) = &config.output {
        std::fs::write(path, &csv)?;
    }
    Ok(ExperimentOutcome { runs, rows, csv })
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub users: usize,
    pub ms_per_iter: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln(ms_per_iter)` against `ln(K)`; `None`
    /// with fewer than two sizes.
    pub slope: Option<f64>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,ms_per_iter\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{}\n",
                r.users,
                crate::trace::format_real(r.ms_per_iter)
            ));
        }
        out
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean wall time per CGP iteration at each user count. Each size runs
/// `iters` iterations (no early stop) three times and keeps the fastest
/// run to damp scheduler noise.
pub fn scaling_benchmark(
    user_counts: &[usize],
    nt: usize,
    nr: usize,
    iters: usize,
    seed: u64,
) -> Result<ScalingReport> {
    if user_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "user counts must be strictly ascending".into(),
        ));
    }
    let config = OptimizerConfig {
        epsilon: f64::MIN_POSITIVE,
        max_iters: iters.max(1),
        ..OptimizerConfig::default()
    };
    let mut rows = Vec::with_capacity(user_counts.len());
    for &users in user_counts {
        let channels = generate_rayleigh_channels(users, nt, nr, seed)?;
        let instance = ProblemInstance::new(channels, &vec![1.0; users], DEFAULT_POWER, "bench")?;
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let start = Instant::now();
            let result = cgp_solve(&instance, &config, None)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            best = best.min(elapsed / result.iterations().max(1) as f64);
        }
        rows.push(ScalingRow {
            users,
            ms_per_iter: best,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.users as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.ms_per_iter.ln()).collect();
    Ok(ScalingReport {
        slope: fit_slope(&x, &y),
        rows,
    })
}
