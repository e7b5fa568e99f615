//! Constrained problem abstraction and the evaluation budget.
//!
//! A problem is `min f(x)` subject to `g_i(x) <= 0`, `h_j(x) = 0` and the
//! box `lower <= x <= upper`. Evaluators return the raw constraint values;
//! tolerances are applied later by [`crate::constraint::mean_violation`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Raw output of one evaluator call.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvaluation {
    pub objective: f64,
    pub ineq: Vec<f64>,
    pub eq: Vec<f64>,
}

impl RawEvaluation {
    pub fn new(objective: f64, ineq: Vec<f64>, eq: Vec<f64>) -> Self {
        Self { objective, ineq, eq }
    }

    pub fn unconstrained(objective: f64) -> Self {
        Self::new(objective, Vec::new(), Vec::new())
    }

    pub fn is_finite(&self) -> bool {
        self.objective.is_finite()
            && self.ineq.iter().all(|v| v.is_finite())
            && self.eq.iter().all(|v| v.is_finite())
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> RawEvaluation + Send + Sync>;

/// Immutable problem definition, shareable across concurrent runs.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_ineq: usize,
    pub n_eq: usize,
    pub reference_optimum: Option<f64>,
    evaluator: Evaluator,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("n_ineq", &self.n_ineq)
            .field("n_eq", &self.n_eq)
            .field("reference_optimum", &self.reference_optimum)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new<F>(
        name: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        n_ineq: usize,
        n_eq: usize,
        evaluator: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> RawEvaluation + Send + Sync + 'static,
    {
        let name = name.into();
        let dim = lower.len();
        if dim == 0 {
            return Err(Error::InvalidProblem(format!("`{name}`: dimension must be positive")));
        }
        if upper.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: upper.len() });
        }
        if let Some(k) = (0..dim).find(|&k| !(lower[k] < upper[k])) {
            return Err(Error::InvalidProblem(format!(
                "`{name}`: lower[{k}] = {} is not below upper[{k}] = {}",
                lower[k], upper[k]
            )));
        }
        Ok(Self {
            name,
            dim,
            lower,
            upper,
            n_ineq,
            n_eq,
            reference_optimum: None,
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn with_reference_optimum(mut self, f: f64) -> Self {
        self.reference_optimum = Some(f);
        self
    }

    pub fn is_constrained(&self) -> bool {
        self.n_ineq + self.n_eq > 0
    }

    /// Inclusive box test.
    pub fn in_bounds(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi))
    }

    /// Calls the evaluator once and charges one evaluation to `ledger`.
    ///
    /// The budget check happens before the evaluator runs, so an exhausted
    /// ledger never triggers an evaluation.
    pub fn evaluate(&self, x: &[f64], ledger: &mut BudgetLedger) -> Result<RawEvaluation> {
        self.check_dim(x)?;
        if !self.in_bounds(x)? {
            return Err(Error::OutOfBounds);
        }
        ledger.charge()?;
        let raw = (self.evaluator)(x);
        if raw.ineq.len() != self.n_ineq {
            return Err(Error::DimensionMismatch { expected: self.n_ineq, got: raw.ineq.len() });
        }
        if raw.eq.len() != self.n_eq {
            return Err(Error::DimensionMismatch { expected: self.n_eq, got: raw.eq.len() });
        }
        if !raw.is_finite() {
            return Err(Error::NonFiniteOutput { problem: self.name.clone(), x: x.to_vec() });
        }
        Ok(raw)
    }

    /// Evaluates without touching any budget. Used by verification code only.
    pub fn evaluate_unmetered(&self, x: &[f64]) -> Result<RawEvaluation> {
        self.check_dim(x)?;
        Ok((self.evaluator)(x))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

/// Counts evaluator calls against a fixed budget. Owned by exactly one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetLedger {
    nfe: u64,
    max_fe: u64,
}

impl BudgetLedger {
    pub fn new(max_fe: u64) -> Result<Self> {
        if max_fe == 0 {
            return Err(Error::InvalidConfig("max_fe must be positive".into()));
        }
        Ok(Self { nfe: 0, max_fe })
    }

    pub fn nfe(&self) -> u64 {
        self.nfe
    }

    pub fn max_fe(&self) -> u64 {
        self.max_fe
    }

    pub fn remaining(&self) -> u64 {
        self.max_fe - self.nfe
    }

    pub fn is_exhausted(&self) -> bool {
        self.nfe >= self.max_fe
    }

    /// Fraction of the budget consumed, in [0, 1].
    pub fn progress(&self) -> f64 {
        self.nfe as f64 / self.max_fe as f64
    }

    fn charge(&mut self) -> Result<()> {
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted { max_fe: self.max_fe });
        }
        self.nfe += 1;
        Ok(())
    }

    /// Ledger positioned at an arbitrary count; handy when probing schedules.
    pub fn at(nfe: u64, max_fe: u64) -> Result<Self> {
        let mut ledger = Self::new(max_fe)?;
        if nfe > max_fe {
            return Err(Error::InvalidConfig(format!("nfe {nfe} exceeds max_fe {max_fe}")));
        }
        ledger.nfe = nfe;
        Ok(ledger)
    }
}
