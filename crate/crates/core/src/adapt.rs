//! Success-history parameter adaptation.
//!
//! The standard branch draws F around the cube root of the previous
//! generation's success rate; the exploitation-biased (EB) branch draws F
//! from a truncated Cauchy around a memory slot. Both draw CR from a memory
//! slot, with staged lower bounds for the EB branch early in the run.

use crate::error::{Error, Result};
use crate::problem::BudgetLedger;
use crate::rng::RandomSource;

pub const FALLBACK_F: f64 = 0.4;
pub const FALLBACK_CR: f64 = 0.9;
pub const INITIAL_F: f64 = 0.3;
pub const INITIAL_CR: f64 = 1.0;
pub const DEFAULT_HYBRID_RATE: f64 = 0.7;
pub const INITIAL_SUCCESS_RATE: f64 = 0.5;

const STANDARD_F_SD: f64 = 0.05;
const EB_F_SCALE: f64 = 0.1;
const CR_SD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Standard,
    Eb,
}

/// `H` adaptive slots followed by one fixed fallback slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    m_f: Vec<f64>,
    m_cr: Vec<f64>,
    write_pos: usize,
}

impl MemoryBank {
    pub fn new(h: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidConfig("memory size H must be positive".into()));
        }
        let mut m_f = vec![INITIAL_F; h];
        let mut m_cr = vec![INITIAL_CR; h];
        m_f.push(FALLBACK_F);
        m_cr.push(FALLBACK_CR);
        Ok(Self { m_f, m_cr, write_pos: 0 })
    }

    /// Number of adaptive slots, `H`.
    pub fn size(&self) -> usize {
        self.m_f.len() - 1
    }

    /// Total number of slots including the fallback, `H + 1`.
    pub fn slots(&self) -> usize {
        self.m_f.len()
    }

    pub fn fallback_slot(&self) -> usize {
        self.size()
    }

    pub fn m_f(&self, slot: usize) -> f64 {
        self.m_f[slot]
    }

    pub fn m_cr(&self, slot: usize) -> f64 {
        self.m_cr[slot]
    }

    /// Zero-based slot the next update writes to.
    pub fn write_pos(&self) -> usize {
        self.write_pos
    }

    #[cfg(test)]
    pub(crate) fn set_slot(&mut self, slot: usize, m_f: f64, m_cr: f64) {
        self.m_f[slot] = m_f;
        self.m_cr[slot] = m_cr;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptState {
    pub success_rate: f64,
    pub hybrid_rate: f64,
}

impl AdaptState {
    pub fn new(hybrid_rate: f64) -> Self {
        Self { success_rate: INITIAL_SUCCESS_RATE, hybrid_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRecord {
    pub f: f64,
    /// Realised crossover ratio.
    pub a: f64,
    pub delta: f64,
    pub branch: Branch,
}

pub fn standard_f_centre(success_rate: f64) -> f64 {
    success_rate.cbrt().max(0.0)
}

/// Normal around `max(0, SR^(1/3))` with sd 0.05, resampled until in (0, 1].
pub fn sample_f_standard(success_rate: f64, rng: &mut impl RandomSource) -> f64 {
    let centre = standard_f_centre(success_rate);
    loop {
        let f = rng.normal(centre, STANDARD_F_SD);
        if f > 0.0 && f <= 1.0 {
            return f;
        }
    }
}

/// Cauchy around the slot's `M_F` with scale 0.1: non-positive draws are
/// resampled and draws above one are clamped.
pub fn sample_f_eb(bank: &MemoryBank, slot: usize, rng: &mut impl RandomSource) -> f64 {
    truncate_cauchy_f(|| rng.cauchy(bank.m_f(slot), EB_F_SCALE))
}

fn truncate_cauchy_f(mut draw: impl FnMut() -> f64) -> f64 {
    loop {
        let f = draw();
        if f > 0.0 {
            return f.min(1.0);
        }
    }
}

/// Staged lower bound on EB-branch CR: 0.7 before a quarter of the budget,
/// 0.6 before half of it.
pub fn eb_cr_floor(ledger: &BudgetLedger) -> f64 {
    let (nfe, max_fe) = (ledger.nfe() as u128, ledger.max_fe() as u128);
    if 4 * nfe < max_fe {
        0.7
    } else if 2 * nfe < max_fe {
        0.6
    } else {
        0.0
    }
}

pub fn clamp_cr(draw: f64, branch: Branch, ledger: &BudgetLedger) -> f64 {
    let cr = draw.clamp(0.0, 1.0);
    match branch {
        Branch::Standard => cr,
        Branch::Eb => cr.max(eb_cr_floor(ledger)),
    }
}

pub fn sample_cr(
    bank: &MemoryBank,
    slot: usize,
    branch: Branch,
    ledger: &BudgetLedger,
    rng: &mut impl RandomSource,
) -> f64 {
    clamp_cr(rng.normal(bank.m_cr(slot), CR_SD), branch, ledger)
}

/// Uniform over all `H + 1` slots, fallback included.
pub fn pick_memory_slot(bank: &MemoryBank, rng: &mut impl RandomSource) -> usize {
    rng.below(bank.slots())
}

/// `Σ w v² / Σ w v`, or `None` when the denominator vanishes.
pub fn weighted_lehmer(values: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = values.fold((0.0, 0.0), |(n, d), (w, v)| (n + w * v * v, d + w * v));
    (den > 0.0).then(|| num / den)
}

/// Weighted-Lehmer update of the slot at `write_pos`, averaged with its
/// previous value. The fallback slot is never written.
pub fn update_memories(bank: &mut MemoryBank, successes: &[SuccessRecord]) {
    if successes.is_empty() {
        return;
    }
    let total: f64 = successes.iter().map(|s| s.delta).sum();
    if !(total > 0.0) {
        return;
    }
    let weights = || successes.iter().map(move |s| s.delta / total);
    let pos = bank.write_pos;
    if let Some(lf) = weighted_lehmer(weights().zip(successes.iter().map(|s| s.f))) {
        bank.m_f[pos] = 0.5 * (bank.m_f[pos] + lf);
    }
    if let Some(la) = weighted_lehmer(weights().zip(successes.iter().map(|s| s.a))) {
        bank.m_cr[pos] = 0.5 * (bank.m_cr[pos] + la);
    }
    bank.write_pos = (pos + 1) % bank.size();
}

/// Share of improvement contributed by the EB branch; 0.7 unless both
/// branches improved.
pub fn update_hybrid_rate(delta_eb: f64, delta_std: f64) -> f64 {
    if delta_eb > 0.0 && delta_std > 0.0 {
        delta_eb / (delta_eb + delta_std)
    } else {
        DEFAULT_HYBRID_RATE
    }
}

pub fn compute_success_rate(n_success: usize, n_trials: usize) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::ZeroTrials);
    }
    debug_assert!(n_success <= n_trials);
    Ok(n_success as f64 / n_trials as f64)
}
