//! Convergence traces as CSV.
//!
//! Header `run,seed,iter,objective,grad_norm,armijo_m,mu_star,max_delta,elapsed_ms`,
//! reals with 12 significant digits, LF line endings.

use std::fmt::Write as _;

use crate::cgp::IterationRecord;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "run,seed,iter,objective,grad_norm,armijo_m,mu_star,max_delta,elapsed_ms";

/// Unit used for the objective column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RateUnit {
    #[default]
    Nats,
    Bits,
}

impl RateUnit {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            RateUnit::Nats => nats,
            RateUnit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub run: usize,
    pub seed: u64,
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub armijo_m: usize,
    pub mu_star: f64,
    pub max_delta: f64,
    pub elapsed_ms: f64,
}

impl TraceRow {
    pub fn from_record(run: usize, seed: u64, record: &IterationRecord, unit: RateUnit) -> Self {
        Self {
            run,
            seed,
            iter: record.iter,
            objective: unit.convert(record.objective),
            grad_norm: record.grad_norm,
            armijo_m: record.armijo_m,
            mu_star: record.water_level,
            max_delta: record.max_delta,
            elapsed_ms: record.elapsed_ms,
        }
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_trace(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.run,
            r.seed,
            r.iter,
            format_real(r.objective),
            format_real(r.grad_norm),
            r.armijo_m,
            format_real(r.mu_star),
            format_real(r.max_delta),
            format_real(r.elapsed_ms),
        );
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => {
            return Err(Error::MalformedTrace(format!(
                "unexpected header {other:?}"
            )));
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::MalformedTrace(format!(
                    "line {}: {} fields",
                    n + 2,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::MalformedTrace(format!("line {}: bad {what}", n + 2));
            let int = |i: usize, what: &str| fields[i].parse::<usize>().map_err(|_| bad(what));
            let real = |i: usize, what: &str| fields[i].parse::<f64>().map_err(|_| bad(what));
            Ok(TraceRow {
                run: int(0, "run")?,
                seed: fields[1].parse().map_err(|_| bad("seed"))?,
                iter: int(2, "iter")?,
                objective: real(3, "objective")?,
                grad_norm: real(4, "grad_norm")?,
                armijo_m: int(5, "armijo_m")?,
                mu_star: real(6, "mu_star")?,
                max_delta: real(7, "max_delta")?,
                elapsed_ms: real(8, "elapsed_ms")?,
            })
        })
        .collect()
}

/// `true` when the objective column never decreases within a run.
pub fn objective_monotone(rows: &[TraceRow], tol: f64) -> bool {
    rows.windows(2)
        .filter(|w| w[0].run == w[1].run)
        .all(|w| w[1].objective >= w[0].objective - tol)
}
