//! Maximum weighted sum rate of a MIMO broadcast channel, computed on the
//! dual multiple-access channel with a conjugate gradient projection solver.
//!
//! Rates are in nats throughout.

// `!(x > 0.0)` is deliberate: it rejects NaN along with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgp;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod hermitian;
pub mod projection;
pub mod sampling;
pub mod trace;
pub mod verify;

pub use cgp::{cgp_solve, gp_solve, OptimizerConfig, SolveResult, SolveStatus};
pub use channel::{CovarianceSet, ProblemInstance};
pub use error::{Error, Result};
