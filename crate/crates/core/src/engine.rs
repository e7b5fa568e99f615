//! The generation loop.
//!
//! Each generation computes the ε level and ranking scores of the front,
//! builds one trial per front member (standard current-to-pbest/1 or the
//! exploitation-biased ordered-donor branch), applies binomial crossover
//! with an optional Cauchy-perturbed base, midpoint repair and one-to-one
//! ε selection, then updates the memories and the hybrid rate and shrinks
//! the front linearly towards `n_min`.
//!
//! Selection is synchronous: every trial of a generation is built from the
//! front as it stood when the generation started, and accepted trials are
//! written back (to the front and to the pool ring) once the loop is over.

use crate::adapt::{
    self, AdaptState, Branch, MemoryBank, SuccessRecord, DEFAULT_HYBRID_RATE,
};
use crate::constraint::{self, EpsilonState, ViolationConfig};
use crate::error::{Error, Result};
use crate::problem::{BudgetLedger, ProblemSpec, RawEvaluation};
use crate::rng::{RandomSource, SeededSource};
use crate::trace::{CheckpointRecord, CheckpointSchedule, RunTrace};

/// Bounded rejection attempts when drawing the pool donor; after that the
/// last draw is kept even if it duplicates `x_i` or `x_r1`.
const POOL_DONOR_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub n0: usize,
    pub n_min: usize,
    pub memory_size: usize,
    pub rho_init: f64,
    pub perturb_prob: f64,
    pub perturb_scale: f64,
    pub pbest_frac: f64,
    pub violation: ViolationConfig,
    pub rank_bias_lambda: f64,
    pub seed: u64,
    /// Pins the hybrid rate instead of adapting it. Instrumentation only.
    pub fixed_hybrid_rate: Option<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            n0: 600,
            n_min: 4,
            memory_size: 5,
            rho_init: DEFAULT_HYBRID_RATE,
            perturb_prob: 0.2,
            perturb_scale: 0.1,
            pbest_frac: 0.3,
            violation: ViolationConfig::default(),
            rank_bias_lambda: 3.0,
            seed: 0,
            fixed_hybrid_rate: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_min < 4 {
            return bad(format!("n_min must be at least 4, got {}", self.n_min));
        }
        if self.n_min > self.n0 {
            return bad(format!("n_min {} exceeds n0 {}", self.n_min, self.n0));
        }
        if self.memory_size == 0 {
            return bad("memory_size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rho_init) {
            return bad(format!("rho_init must lie in [0, 1], got {}", self.rho_init));
        }
        if let Some(r) = self.fixed_hybrid_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("fixed_hybrid_rate must lie in [0, 1], got {r}"));
            }
        }
        if !(0.0..=1.0).contains(&self.perturb_prob) {
            return bad(format!("perturb_prob must lie in [0, 1], got {}", self.perturb_prob));
        }
        if !(self.perturb_scale > 0.0) {
            return bad(format!("perturb_scale must be positive, got {}", self.perturb_scale));
        }
        if !(self.pbest_frac > 0.0 && self.pbest_frac <= 1.0) {
            return bad(format!("pbest_frac must lie in (0, 1], got {}", self.pbest_frac));
        }
        if !(self.rank_bias_lambda > 0.0) {
            return bad(format!("rank_bias_lambda must be positive, got {}", self.rank_bias_lambda));
        }
        self.violation.validate()
    }
}

/// An evaluated point.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    pub raw: RawEvaluation,
    pub f: f64,
    pub phi: f64,
}

impl Individual {
    pub fn new(x: Vec<f64>, raw: RawEvaluation, cfg: &ViolationConfig) -> Self {
        let phi = constraint::mean_violation(&raw, cfg);
        Self { f: raw.objective, phi, x, raw }
    }

    /// Lexicographic (φ, f) comparison used for the best-so-far incumbent.
    pub fn improves_on(&self, other: &Individual) -> bool {
        self.phi < other.phi || (self.phi == other.phi && self.f < other.f)
    }
}

/// Everything recorded about one trial, reported through [`Observer::on_trial`].
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: usize,
    pub branch: Branch,
    pub slot: usize,
    pub f: f64,
    pub cr: f64,
    pub donor: Vec<f64>,
    /// After crossover, before repair.
    pub crossed: Vec<f64>,
    /// After repair; this is the evaluated point.
    pub trial: Vec<f64>,
    pub realized_ratio: f64,
    pub evaluation: Individual,
    pub epsilon: f64,
    pub parent_f: f64,
    pub parent_phi_trunc: f64,
    pub trial_phi_trunc: f64,
    pub accepted: bool,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSummary {
    /// Zero-based index of the generation that just finished.
    pub generation: u64,
    pub nfe_start: u64,
    pub nfe_end: u64,
    pub epsilon: EpsilonState,
    pub front_size_before: usize,
    pub front_size_after: usize,
    pub n_trials: usize,
    pub n_accepted: usize,
    pub n_eb: usize,
    pub n_standard: usize,
    pub success_rate: f64,
    pub hybrid_rate: f64,
    pub terminal: bool,
}

/// Instrumentation hooks. All methods default to no-ops.
pub trait Observer {
    fn on_evaluation(&mut self, _nfe: u64, _evaluated: &Individual, _incumbent: &Individual) {}
    fn on_trial(&mut self, _trial: &TrialRecord) {}
    fn on_generation(&mut self, _summary: &GenerationSummary) {}
}

impl Observer for () {}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn on_evaluation(&mut self, nfe: u64, evaluated: &Individual, incumbent: &Individual) {
        (**self).on_evaluation(nfe, evaluated, incumbent)
    }
    fn on_trial(&mut self, trial: &TrialRecord) {
        (**self).on_trial(trial)
    }
    fn on_generation(&mut self, summary: &GenerationSummary) {
        (**self).on_generation(summary)
    }
}

#[derive(Debug, Clone)]
pub struct EngineState {
    pub front: Vec<Individual>,
    pub pool: Vec<Individual>,
    pub pool_write: usize,
    pub bank: MemoryBank,
    pub adapt: AdaptState,
    pub ledger: BudgetLedger,
    pub epsilon: EpsilonState,
    pub generation: u64,
    pub incumbent: Individual,
    pub terminal: bool,
}

/// Front size after `nfe` evaluations:
/// `floor(n0 + (n_min - n0) nfe / max_fe)`, clamped to `[n_min, n0]`.
pub fn lpsr_size(ledger: &BudgetLedger, n0: usize, n_min: usize) -> usize {
    let span = n0.saturating_sub(n_min) as u128;
    let (nfe, max_fe) = (ledger.nfe() as u128, ledger.max_fe() as u128);
    // floor(n0 - a) = n0 - ceil(a)
    let shrink = (span * nfe).div_ceil(max_fe);
    let size = (n0 as u128).saturating_sub(shrink) as usize;
    size.clamp(n_min, n0)
}

/// `max(2, floor(frac * n))`, never more than `n`.
pub fn pbest_count(n: usize, frac: f64) -> usize {
    ((frac * n as f64).floor() as usize).max(2).min(n)
}

/// The front together with its ranking for one generation.
#[derive(Debug, Clone)]
pub struct RankedFront<'a> {
    pub members: &'a [Individual],
    pub epsilon: f64,
    pub f_max: f64,
    pub scores: Vec<f64>,
    pub phi_trunc: Vec<f64>,
    /// Member indices sorted by ascending score (stable).
    pub order: Vec<usize>,
    pub pbest: usize,
    /// Cumulative rank-bias weights `exp(-lambda * rank / N)`, by rank.
    rank_cdf: Vec<f64>,
}

impl<'a> RankedFront<'a> {
    pub fn new(members: &'a [Individual], epsilon: f64, pbest_frac: f64, lambda: f64) -> Self {
        let n = members.len();
        let f_max = members.iter().map(|m| m.f).fold(f64::NEG_INFINITY, f64::max);
        let scores: Vec<f64> = members
            .iter()
            .map(|m| constraint::rank_score(m.f, m.phi, epsilon, f_max))
            .collect();
        let phi_trunc = members
            .iter()
            .map(|m| constraint::truncated_violation(m.phi, epsilon))
            .collect();
        let order = stable_order(&scores);
        let mut acc = 0.0;
        let rank_cdf = (0..n)
            .map(|rank| {
                acc += (-lambda * rank as f64 / n as f64).exp();
                acc
            })
            .collect();
        Self {
            members,
            epsilon,
            f_max,
            scores,
            phi_trunc,
            order,
            pbest: pbest_count(n, pbest_frac),
            rank_cdf,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member index for a uniform draw `u` in [0, 1) under the exponential
    /// rank bias.
    pub fn rank_biased_pick(&self, u: f64) -> usize {
        let total = *self.rank_cdf.last().expect("non-empty front");
        let target = u * total;
        let rank = self.rank_cdf.partition_point(|&c| c <= target).min(self.len() - 1);
        self.order[rank]
    }
}

fn stable_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// `v = x_i + F (x_pbest - x_i) + F (x_r1 - x_r2)`.
///
/// Draw order: pbest position among the best `p`, then r1 (rank-biased,
/// rejecting `i`), then r2 from the pool (rejecting entries equal to `x_i`
/// or `x_r1`, bounded attempts).
pub fn mutate_standard(
    front: &RankedFront<'_>,
    pool: &[Individual],
    i: usize,
    f: f64,
    rng: &mut impl RandomSource,
) -> Result<Vec<f64>> {
    if front.len() < 4 {
        return Err(Error::FrontTooSmall(front.len()));
    }
    let xi = &front.members[i].x;
    let pbest = &front.members[front.order[rng.below(front.pbest)]].x;
    let r1 = loop {
        let r = front.rank_biased_pick(rng.uniform());
        if r != i {
            break r;
        }
    };
    let xr1 = &front.members[r1].x;
    let mut r2 = rng.below(pool.len());
    for _ in 1..POOL_DONOR_ATTEMPTS {
        if pool[r2].x != *xi && pool[r2].x != *xr1 {
            break;
        }
        r2 = rng.below(pool.len());
    }
    let xr2 = &pool[r2].x;
    Ok((0..xi.len())
        .map(|j| xi[j] + f * (pbest[j] - xi[j]) + f * (xr1[j] - xr2[j]))
        .collect())
}

/// `v = x_i + F (x_best - x_i) + F (x_mid - x_worst)` over three distinct
/// front members other than `i`, ordered by ranking score.
pub fn mutate_eb(front: &RankedFront<'_>, i: usize, f: f64, rng: &mut impl RandomSource) -> Result<Vec<f64>> {
    if front.len() < 4 {
        return Err(Error::FrontTooSmall(front.len()));
    }
    let mut picks: Vec<usize> = Vec::with_capacity(3);
    while picks.len() < 3 {
        let r = rng.below(front.len());
        if r != i && !picks.contains(&r) {
            picks.push(r);
        }
    }
    picks.sort_by(|&a, &b| front.scores[a].total_cmp(&front.scores[b]));
    let xi = &front.members[i].x;
    let [best, mid, worst] = [picks[0], picks[1], picks[2]].map(|k| &front.members[k].x);
    Ok((0..xi.len())
        .map(|j| xi[j] + f * (best[j] - xi[j]) + f * (mid[j] - worst[j]))
        .collect())
}

/// Binomial crossover with a possibly perturbed base.
///
/// One uniform draw decides (probability `perturb_prob`) whether the base
/// is the parent perturbed componentwise by `Cauchy(parent_j, perturb_scale)`.
/// Then `j_rand` is drawn and one uniform per component; component `j`
/// comes from the donor when its draw is below `cr` or `j == j_rand`.
/// Returns the trial and the fraction of donor components.
pub fn crossover(
    parent: &[f64],
    donor: &[f64],
    cr: f64,
    perturb_prob: f64,
    perturb_scale: f64,
    rng: &mut impl RandomSource,
) -> (Vec<f64>, f64) {
    let d = parent.len();
    let base: Vec<f64> = if rng.uniform() < perturb_prob {
        parent.iter().map(|&p| rng.cauchy(p, perturb_scale)).collect()
    } else {
        parent.to_vec()
    };
    let j_rand = rng.below(d);
    let mut taken = 0usize;
    let trial = (0..d)
        .map(|j| {
            if rng.uniform() < cr || j == j_rand {
                taken += 1;
                donor[j]
            } else {
                base[j]
            }
        })
        .collect();
    (trial, taken as f64 / d as f64)
}

/// Midpoint repair towards the parent for components outside the box.
pub fn repair(trial: &[f64], parent: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    trial
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            if t < lower[j] {
                (parent[j] + lower[j]) / 2.0
            } else if t > upper[j] {
                (parent[j] + upper[j]) / 2.0
            } else {
                t
            }
        })
        .collect()
}

/// Improvement credited to an accepted trial: the drop in truncated
/// violation when it differs, otherwise the drop in objective.
pub fn improvement(parent_phi_trunc: f64, parent_f: f64, trial_phi_trunc: f64, trial_f: f64) -> f64 {
    if trial_phi_trunc != parent_phi_trunc {
        parent_phi_trunc - trial_phi_trunc
    } else {
        parent_f - trial_f
    }
}

pub struct Engine<'p, R> {
    problem: &'p ProblemSpec,
    config: EngineConfig,
    rng: R,
    state: EngineState,
}

impl<'p, R: RandomSource> Engine<'p, R> {
    /// Samples and evaluates `n0` uniform points; they form both the front
    /// and the pool.
    pub fn initialize(
        config: EngineConfig,
        problem: &'p ProblemSpec,
        max_fe: u64,
        mut rng: R,
        obs: &mut impl Observer,
    ) -> Result<Self> {
        config.validate()?;
        if (config.n0 as u64) > max_fe {
            return Err(Error::InvalidConfig(format!(
                "budget {max_fe} is smaller than the initial front size {}",
                config.n0
            )));
        }
        let mut ledger = BudgetLedger::new(max_fe)?;
        let mut front: Vec<Individual> = Vec::with_capacity(config.n0);
        let mut incumbent: Option<Individual> = None;
        for _ in 0..config.n0 {
            let x: Vec<f64> = problem
                .lower
                .iter()
                .zip(&problem.upper)
                .map(|(&lo, &hi)| (lo + rng.uniform() * (hi - lo)).min(hi))
                .collect();
            let raw = problem.evaluate(&x, &mut ledger)?;
            let ind = Individual::new(x, raw, &config.violation);
            if incumbent.as_ref().is_none_or(|b| ind.improves_on(b)) {
                incumbent = Some(ind.clone());
            }
            obs.on_evaluation(ledger.nfe(), &ind, incumbent.as_ref().expect("set above"));
            front.push(ind);
        }
        let state = EngineState {
            pool: front.clone(),
            front,
            pool_write: 0,
            bank: MemoryBank::new(config.memory_size)?,
            adapt: AdaptState::new(config.fixed_hybrid_rate.unwrap_or(config.rho_init)),
            ledger,
            epsilon: EpsilonState::zero(),
            generation: 0,
            incumbent: incumbent.expect("n0 >= 4"),
            terminal: ledger.is_exhausted(),
        };
        Ok(Self { problem, config, rng, state })
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn best(&self) -> &Individual {
        &self.state.incumbent
    }

    pub fn is_terminal(&self) -> bool {
        self.state.terminal
    }

    /// Runs one generation. Stops early when the budget runs out mid-loop;
    /// the memories, hybrid rate and front size are still updated from the
    /// trials that completed.
    pub fn generation(&mut self, obs: &mut impl Observer) -> Result<GenerationSummary> {
        if self.state.ledger.is_exhausted() {
            return Err(Error::BudgetExhausted { max_fe: self.state.ledger.max_fe() });
        }
        let cfg = &self.config;
        let problem = self.problem;
        let st = &mut self.state;
        let n = st.front.len();
        if n < 4 {
            return Err(Error::FrontTooSmall(n));
        }
        let nfe_start = st.ledger.nfe();

        let phis: Vec<f64> = st.front.iter().map(|m| m.phi).collect();
        let eps = constraint::epsilon_level(&phis, &st.ledger, &cfg.violation)?;
        st.epsilon = eps;
        let ranked = RankedFront::new(&st.front, eps.epsilon, cfg.pbest_frac, cfg.rank_bias_lambda);

        let mut replacements: Vec<(usize, Individual)> = Vec::new();
        let mut successes: Vec<SuccessRecord> = Vec::new();
        let (mut n_trials, mut n_eb, mut n_standard) = (0usize, 0usize, 0usize);
        let (mut delta_eb, mut delta_std) = (0.0f64, 0.0f64);

        for i in 0..n {
            if st.ledger.is_exhausted() {
                break;
            }
            let rng = &mut self.rng;
            let branch = if rng.uniform() < st.adapt.hybrid_rate { Branch::Eb } else { Branch::Standard };
            let slot = adapt::pick_memory_slot(&st.bank, rng);
            let (f, cr, donor) = match branch {
                Branch::Standard => {
                    n_standard += 1;
                    let f = adapt::sample_f_standard(st.adapt.success_rate, rng);
                    let cr = adapt::sample_cr(&st.bank, slot, branch, &st.ledger, rng);
                    (f, cr, mutate_standard(&ranked, &st.pool, i, f, rng)?)
                }
                Branch::Eb => {
                    n_eb += 1;
                    let f = adapt::sample_f_eb(&st.bank, slot, rng);
                    let cr = adapt::sample_cr(&st.bank, slot, branch, &st.ledger, rng);
                    (f, cr, mutate_eb(&ranked, i, f, rng)?)
                }
            };
            let parent = &st.front[i];
            let (crossed, ratio) = crossover(&parent.x, &donor, cr, cfg.perturb_prob, cfg.perturb_scale, rng);
            let trial_x = repair(&crossed, &parent.x, &problem.lower, &problem.upper);
            let raw = problem.evaluate(&trial_x, &mut st.ledger)?;
            n_trials += 1;
            let trial = Individual::new(trial_x.clone(), raw, &cfg.violation);
            if trial.improves_on(&st.incumbent) {
                st.incumbent = trial.clone();
            }
            obs.on_evaluation(st.ledger.nfe(), &trial, &st.incumbent);

            let parent_phi_trunc = ranked.phi_trunc[i];
            let trial_phi_trunc = constraint::truncated_violation(trial.phi, eps.epsilon);
            let accepted = constraint::accepts(parent_phi_trunc, parent.f, trial_phi_trunc, trial.f);
            let delta = if accepted {
                improvement(parent_phi_trunc, parent.f, trial_phi_trunc, trial.f)
            } else {
                0.0
            };
            obs.on_trial(&TrialRecord {
                index: i,
                branch,
                slot,
                f,
                cr,
                donor,
                crossed,
                trial: trial_x,
                realized_ratio: ratio,
                evaluation: trial.clone(),
                epsilon: eps.epsilon,
                parent_f: parent.f,
                parent_phi_trunc,
                trial_phi_trunc,
                accepted,
                delta,
            });
            if accepted {
                if delta > 0.0 {
                    successes.push(SuccessRecord { f, a: ratio, delta, branch });
                    match branch {
                        Branch::Eb => delta_eb += delta,
                        Branch::Standard => delta_std += delta,
                    }
                }
                replacements.push((i, trial));
            }
        }
        drop(ranked);

        let n_accepted = replacements.len();
        for (i, ind) in replacements {
            st.pool[st.pool_write] = ind.clone();
            st.pool_write = (st.pool_write + 1) % st.pool.len();
            st.front[i] = ind;
        }

        if n_trials > 0 {
            st.adapt.success_rate = adapt::compute_success_rate(n_accepted, n_trials)?;
        }
        adapt::update_memories(&mut st.bank, &successes);
        st.adapt.hybrid_rate = match cfg.fixed_hybrid_rate {
            Some(r) => r,
            None => adapt::update_hybrid_rate(delta_eb, delta_std),
        };

        let target = lpsr_size(&st.ledger, cfg.n0, cfg.n_min).min(n);
        if target < n {
            shrink_front(&mut st.front, eps.epsilon, target);
        }

        let summary = GenerationSummary {
            generation: st.generation,
            nfe_start,
            nfe_end: st.ledger.nfe(),
            epsilon: eps,
            front_size_before: n,
            front_size_after: st.front.len(),
            n_trials,
            n_accepted,
            n_eb,
            n_standard,
            success_rate: st.adapt.success_rate,
            hybrid_rate: st.adapt.hybrid_rate,
            terminal: st.ledger.is_exhausted(),
        };
        st.generation += 1;
        st.terminal = summary.terminal;
        obs.on_generation(&summary);
        Ok(summary)
    }
}

/// Keeps the `target` best members by ranking score under `epsilon`, with
/// `f_max` taken over the current front. Survivors keep their order.
fn shrink_front(front: &mut Vec<Individual>, epsilon: f64, target: usize) {
    let f_max = front.iter().map(|m| m.f).fold(f64::NEG_INFINITY, f64::max);
    let scores: Vec<f64> = front
        .iter()
        .map(|m| constraint::rank_score(m.f, m.phi, epsilon, f_max))
        .collect();
    let mut keep = vec![false; front.len()];
    for &k in stable_order(&scores).iter().take(target) {
        keep[k] = true;
    }
    let mut flags = keep.into_iter();
    front.retain(|_| flags.next().expect("one flag per member"));
}

/// Records the incumbent every time the evaluation count reaches the next
/// checkpoint threshold, forwarding all events to `inner`.
struct CheckpointRecorder<'s, O> {
    schedule: &'s CheckpointSchedule,
    points: Vec<CheckpointRecord>,
    inner: O,
}

impl<O: Observer> Observer for CheckpointRecorder<'_, O> {
    fn on_evaluation(&mut self, nfe: u64, evaluated: &Individual, incumbent: &Individual) {
        while let Some(&threshold) = self.schedule.thresholds().get(self.points.len()) {
            if nfe < threshold {
                break;
            }
            self.points.push(CheckpointRecord {
                checkpoint: self.points.len() + 1,
                nfe,
                best_f: incumbent.f,
                best_cv: incumbent.phi,
            });
        }
        self.inner.on_evaluation(nfe, evaluated, incumbent);
    }
    fn on_trial(&mut self, trial: &TrialRecord) {
        self.inner.on_trial(trial)
    }
    fn on_generation(&mut self, summary: &GenerationSummary) {
        self.inner.on_generation(summary)
    }
}

/// Runs until the schedule's budget is exhausted using a generator seeded
/// from `config.seed`.
pub fn run(config: &EngineConfig, problem: &ProblemSpec, schedule: &CheckpointSchedule) -> Result<RunTrace> {
    run_with(config, problem, schedule, SeededSource::new(config.seed), &mut ())
}

pub fn run_with<R: RandomSource, O: Observer>(
    config: &EngineConfig,
    problem: &ProblemSpec,
    schedule: &CheckpointSchedule,
    rng: R,
    obs: &mut O,
) -> Result<RunTrace> {
    let mut recorder = CheckpointRecorder { schedule, points: Vec::with_capacity(schedule.len()), inner: obs };
    let mut engine = Engine::initialize(config.clone(), problem, schedule.max_fe(), rng, &mut recorder)?;
    while !engine.is_terminal() {
        engine.generation(&mut recorder)?;
    }
    let best = engine.best();
    debug_assert_eq!(recorder.points.len(), schedule.len());
    Ok(RunTrace {
        problem: problem.name.clone(),
        run_id: 0,
        seed: config.seed,
        dim: problem.dim,
        max_fe: schedule.max_fe(),
        points: recorder.points,
        final_f: best.f,
        final_cv: best.phi,
    })
}
