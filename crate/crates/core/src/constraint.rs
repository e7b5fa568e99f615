//! Violation measure, ε-level schedule, ranking score and one-to-one
//! selection. Everything here is a pure function.

use crate::error::{Error, Result};
use crate::problem::{BudgetLedger, RawEvaluation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationConfig {
    /// Equality tolerance.
    pub eps_eq: f64,
    /// Fraction of the front admitted by the ε level at the start of a run.
    pub eta: f64,
}

impl Default for ViolationConfig {
    fn default() -> Self {
        Self { eps_eq: 1e-4, eta: 0.8 }
    }
}

impl ViolationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_eq > 0.0) {
            return Err(Error::InvalidConfig(format!("eps_eq must be positive, got {}", self.eps_eq)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonPhase {
    Active,
    Zeroed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonState {
    pub epsilon: f64,
    pub k: usize,
    pub phase: EpsilonPhase,
}

impl EpsilonState {
    /// ε = 0 before any front exists.
    pub fn zero() -> Self {
        Self { epsilon: 0.0, k: 1, phase: EpsilonPhase::Zeroed }
    }
}

/// Averaged violation: inequality excess plus equality excess beyond
/// `eps_eq`, divided by the number of constraints. Zero when unconstrained.
pub fn mean_violation(raw: &RawEvaluation, cfg: &ViolationConfig) -> f64 {
    let m = raw.ineq.len() + raw.eq.len();
    if m == 0 {
        return 0.0;
    }
    let ineq: f64 = raw.ineq.iter().map(|&g| g.max(0.0)).sum();
    let eq: f64 = raw.eq.iter().map(|&h| (h.abs() - cfg.eps_eq).max(0.0)).sum();
    (ineq + eq) / m as f64
}

/// ε level for the current front.
///
/// `k = max(1, floor(eta * N * (1 - nfe/max_fe)^2))`; ε is the k-th smallest
/// violation (1-indexed, duplicates kept) while `nfe <= 0.8 max_fe`, and zero
/// afterwards.
pub fn epsilon_level(front_phis: &[f64], ledger: &BudgetLedger, cfg: &ViolationConfig) -> Result<EpsilonState> {
    let n = front_phis.len();
    if n == 0 {
        return Err(Error::EmptyFront);
    }
    let remaining = 1.0 - ledger.progress();
    let k = ((cfg.eta * n as f64 * remaining * remaining).floor() as usize).clamp(1, n);

    // nfe <= 0.8 max_fe, in integers
    if 5 * ledger.nfe() as u128 > 4 * ledger.max_fe() as u128 {
        return Ok(EpsilonState { epsilon: 0.0, k, phase: EpsilonPhase::Zeroed });
    }
    let mut sorted = front_phis.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EpsilonState { epsilon: sorted[k - 1], k, phase: EpsilonPhase::Active })
}

/// Ranking score: the objective for ε-feasible points, otherwise
/// `f_max + 1 + φ`, which places every violator above every ε-feasible point.
pub fn rank_score(f: f64, phi: f64, epsilon: f64, f_max: f64) -> f64 {
    if phi <= epsilon {
        f
    } else {
        f_max + 1.0 + phi
    }
}

/// Violation truncated at ε: zero when `phi <= epsilon`.
pub fn truncated_violation(phi: f64, epsilon: f64) -> f64 {
    if phi <= epsilon {
        0.0
    } else {
        phi
    }
}

/// An individual scored under a fixed (ε, f_max).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredIndividual {
    pub x: Vec<f64>,
    pub f: f64,
    pub phi: f64,
    pub phi_trunc: f64,
    pub score: f64,
}

impl ScoredIndividual {
    pub fn new(x: Vec<f64>, f: f64, phi: f64, epsilon: f64, f_max: f64) -> Self {
        Self {
            x,
            f,
            phi,
            phi_trunc: truncated_violation(phi, epsilon),
            score: rank_score(f, phi, epsilon, f_max),
        }
    }
}

/// One-to-one replacement test on already-truncated violations.
pub fn accepts(parent_phi_trunc: f64, parent_f: f64, trial_phi_trunc: f64, trial_f: f64) -> bool {
    trial_phi_trunc < parent_phi_trunc || (trial_phi_trunc == parent_phi_trunc && trial_f <= parent_f)
}

/// Whether `trial` replaces `parent`; both must have been scored under `epsilon`.
pub fn select(parent: &ScoredIndividual, trial: &ScoredIndividual, epsilon: f64) -> bool {
    debug_assert_eq!(parent.phi_trunc, truncated_violation(parent.phi, epsilon));
    debug_assert_eq!(trial.phi_trunc, truncated_violation(trial.phi, epsilon));
    accepts(parent.phi_trunc, parent.f, trial.phi_trunc, trial.f)
}

/// Feasibility-aware final quality: the objective when feasible, otherwise
/// `b_p + cv` where `b_p` is the largest finite final objective plus one.
pub fn feasibility_aware_quality(final_f: f64, final_cv: f64, b_p: f64) -> f64 {
    if final_cv <= 0.0 {
        final_f
    } else {
        b_p + final_cv
    }
}

/// `B_p`: largest finite final objective over all compared runs, plus one.
pub fn quality_offset(final_objectives: impl IntoIterator<Item = f64>) -> f64 {
    let max = final_objectives
        .into_iter()
        .filter(|f| f.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        max + 1.0
    } else {
        1.0
    }
}
