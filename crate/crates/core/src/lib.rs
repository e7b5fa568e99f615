//! Constrained single-objective optimisation with a reconstructed
//! differential-evolution engine (success-history adaptation, an
//! exploitation-biased hybrid branch and adaptive ε-constraint ranking),
//! plus the benchmark harness and the nonparametric statistics used to
//! compare seeded runs.
//!
//! Module map:
//!
//! * [`problem`]: problem abstraction, evaluations and the budget ledger.
//! * [`constraint`]: violation measure, ε schedule, ranking score, selection.
//! * [`adapt`]: F/CR sampling, success-history memories, hybrid rate.
//! * [`engine`]: the generation loop and full runs.
//! * [`suite`]: built-in analytic constrained problems.
//! * [`harness`]: seeded experiment batches, checkpoints, trace files, targets.
//! * [`metrics`] and [`stats`]: per-run metrics and cross-algorithm tests.
//! * [`report`]: W/T/L tables and Friedman summaries.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod config;
pub mod constraint;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod problem;
pub mod report;
pub mod rng;
pub mod selfcheck;
pub mod stats;
pub mod suite;
pub mod trace;

pub use error::{Error, Result};
