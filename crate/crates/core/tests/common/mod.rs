//! Independent oracles shared by the integration tests and the acceptance
//! runner. Each check returns `Ok(detail)` or `Err(reason)`.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdex_core::adapt::Branch;
use rdex_core::engine::{self, Engine, EngineConfig, GenerationSummary, Observer, TrialRecord};
use rdex_core::harness::{run_experiment, ExperimentPlan};
use rdex_core::metrics::{auc, time_to_target};
use rdex_core::problem::{ProblemSpec, RawEvaluation};
use rdex_core::rng::{Draw, ScriptedSource, SeededSource};
use rdex_core::stats::{vargha_delaney_a12, wilcoxon_rank_sum};
use rdex_core::suite;
use rdex_core::trace::{plan_checkpoints, CheckpointRecord, RunTrace};

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: got {a:?}, expected {b:?}"))
}

#[derive(Default)]
pub struct Collector {
    pub trials: Vec<TrialRecord>,
    pub generations: Vec<GenerationSummary>,
}

impl Observer for Collector {
    fn on_trial(&mut self, trial: &TrialRecord) {
        self.trials.push(trial.clone());
    }
    fn on_generation(&mut self, summary: &GenerationSummary) {
        self.generations.push(summary.clone());
    }
}

// ---------------------------------------------------------------------------
// One scripted generation on D = 2, N = 4.

/// min x0² + x1² s.t. 1 - x0 - x1 <= 0 on [-2, 2]².
pub fn half_plane_problem() -> ProblemSpec {
    ProblemSpec::new("half-plane", vec![-2.0; 2], vec![2.0; 2], 1, 0, |x: &[f64]| {
        RawEvaluation::new(x[0] * x[0] + x[1] * x[1], vec![1.0 - x[0] - x[1]], vec![])
    })
    .expect("valid problem")
}

fn f_of(x: [f64; 2]) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

fn phi_of(x: [f64; 2]) -> f64 {
    (1.0 - x[0] - x[1]).max(0.0)
}

/// Initial front: m0 = (1.25, 1.25) feasible, m1 = (0, 0), m2 = (-1.25, 1.25)
/// and m3 = (-1.25, 0) infeasible with violations 1, 1, 2.25.
fn one_generation_script() -> Vec<Draw> {
    use Draw::*;
    let mut s = vec![
        Uniform(0.8125), Uniform(0.8125), // m0
        Uniform(0.5), Uniform(0.5), // m1
        Uniform(0.1875), Uniform(0.8125), // m2
        Uniform(0.1875), Uniform(0.5), // m3
    ];
    // trial 0: EB, slot 0, F = 0.5, CR = 0.9, donors 1, 2, 3, no perturbation
    s.extend([Uniform(0.1), Below(0), Cauchy(0.5), Normal(0.9), Below(1), Below(2), Below(3)]);
    s.extend([Uniform(0.9), Below(0), Uniform(0.5), Uniform(0.95)]);
    // trial 1: standard, fallback slot, F resampled once, CR = 0.4,
    // r1 rejects i once, r2 rejects x_r1 once, perturbed base
    s.extend([Uniform(0.8), Below(5), Normal(1.2), Normal(0.75), Normal(0.4)]);
    s.extend([Below(1), Uniform(0.0), Uniform(0.7), Below(0), Below(3)]);
    s.extend([Uniform(0.1), Cauchy(0.05), Cauchy(-0.1), Below(1), Uniform(0.99), Uniform(0.3)]);
    // trial 2: draw equal to ρ selects standard; F = 1, CR clipped to 1;
    // donor leaves the box and is repaired
    s.extend([Uniform(0.7), Below(2), Normal(-0.1), Normal(1.0), Normal(1.5)]);
    s.extend([Below(0), Uniform(0.6), Below(3)]);
    s.extend([Uniform(0.5), Below(0), Uniform(0.1), Uniform(0.2)]);
    // trial 3: EB, Cauchy F resampled then clamped, CR floored at 0.7,
    // donor picks reject i and a duplicate, perturbed base
    s.extend([Uniform(0.3), Below(1), Cauchy(-0.2), Cauchy(1.7), Normal(0.3)]);
    s.extend([Below(3), Below(0), Below(0), Below(2), Below(1)]);
    s.extend([Uniform(0.05), Cauchy(-1.0), Cauchy(0.5), Below(1), Uniform(0.8), Uniform(0.0)]);
    s
}

struct ExpectedTrial {
    branch: Branch,
    slot: usize,
    f: f64,
    cr: f64,
    donor: [f64; 2],
    crossed: [f64; 2],
    trial: [f64; 2],
    ratio: f64,
    accepted: bool,
    delta: f64,
}

pub fn one_generation_oracle() -> Check {
    let problem = half_plane_problem();
    let config = EngineConfig { n0: 4, n_min: 4, ..EngineConfig::default() };
    let mut rng = ScriptedSource::new(one_generation_script());
    let mut obs = Collector::default();
    let mut engine = Engine::initialize(config, &problem, 100, &mut rng, &mut obs).map_err(|e| e.to_string())?;
    let summary = engine.generation(&mut obs).map_err(|e| e.to_string())?;
    let st = engine.state().clone();
    drop(engine);

    let m = [[1.25, 1.25], [0.0, 0.0], [-1.25, 1.25], [-1.25, 0.0]];

    // ε: k = floor(0.8 * 4 * (1 - 4/100)²) = 2; sorted φ = 0, 1, 1, 2.25 -> ε = 1.
    let k_eps = (0.8f64 * 4.0 * (1.0 - 4.0 / 100.0) * (1.0 - 4.0 / 100.0)).floor() as usize;
    ensure(k_eps == 2 && summary.epsilon.k == 2, || format!("epsilon k = {}", summary.epsilon.k))?;
    close(summary.epsilon.epsilon, 1.0, 0.0, "epsilon")?;
    let eps = 1.0;
    let trunc = |p: f64| if p <= eps { 0.0 } else { p };

    // Scores with f_max = 3.125: m0 3.125, m1 0, m2 3.125, m3 3.125 + 1 + 2.25.
    // Stable order 1, 0, 2, 3; pbest = max(2, floor(0.3 * 4)) = 2.
    let w: Vec<f64> = (0..4).map(|r| (-3.0 * r as f64 / 4.0).exp()).collect();
    let total: f64 = w.iter().sum();
    let rank_of = |u: f64| {
        let mut acc = 0.0;
        for (r, wr) in w.iter().enumerate() {
            acc += wr;
            if u * total < acc {
                return r;
            }
        }
        3
    };
    let order = [1usize, 0, 2, 3];
    ensure(order[rank_of(0.0)] == 1 && order[rank_of(0.7)] == 0 && order[rank_of(0.6)] == 0, || {
        "rank-biased picks".into()
    })?;

    let (x0, x1, x2, x3) = (m[0], m[1], m[2], m[3]);
    // trial 0: EB with best m1, mid m2, worst m3.
    let f0 = 0.5;
    let d0 = [
        x0[0] + f0 * (x1[0] - x0[0]) + f0 * (x2[0] - x3[0]),
        x0[1] + f0 * (x1[1] - x0[1]) + f0 * (x2[1] - x3[1]),
    ];
    let t0 = [d0[0], x0[1]];
    // trial 1: standard, pbest m0, r1 m0, r2 pool m3; base (0.05, -0.1).
    let f1 = 0.75;
    let d1 = [
        x1[0] + f1 * (x0[0] - x1[0]) + f1 * (x0[0] - x3[0]),
        x1[1] + f1 * (x0[1] - x1[1]) + f1 * (x0[1] - x3[1]),
    ];
    let t1 = [0.05, d1[1]];
    // trial 2: standard, pbest m1, r1 m0, r2 pool m3; repaired first component.
    let f2 = 1.0;
    let d2 = [
        x2[0] + f2 * (x1[0] - x2[0]) + f2 * (x0[0] - x3[0]),
        x2[1] + f2 * (x1[1] - x2[1]) + f2 * (x0[1] - x3[1]),
    ];
    let c2 = d2;
    let t2 = [(x2[0] + 2.0) / 2.0, c2[1]];
    // trial 3: EB picks 0, 2, 1 -> best m1, mid m0 (tie with m2 broken by
    // pick order), worst m2; base (-1.0, 0.5).
    let f3 = 1.0;
    let d3 = [
        x3[0] + f3 * (x1[0] - x3[0]) + f3 * (x0[0] - x2[0]),
        x3[1] + f3 * (x1[1] - x3[1]) + f3 * (x0[1] - x2[1]),
    ];
    let t3 = [-1.0, d3[1]];

    let parents = [x0, x1, x2, x3];
    let trials = [t0, t1, t2, t3];
    let mut accepted = [false; 4];
    let mut deltas = [0.0; 4];
    for i in 0..4 {
        let (pp, pf) = (trunc(phi_of(parents[i])), f_of(parents[i]));
        let (tp, tf) = (trunc(phi_of(trials[i])), f_of(trials[i]));
        accepted[i] = tp < pp || (tp == pp && tf <= pf);
        if accepted[i] {
            deltas[i] = if tp != pp { pp - tp } else { pf - tf };
        }
    }
    ensure(accepted == [true, false, true, true], || format!("hand acceptance {accepted:?}"))?;

    let expected = [
        ExpectedTrial { branch: Branch::Eb, slot: 0, f: f0, cr: 0.9, donor: d0, crossed: t0, trial: t0, ratio: 0.5, accepted: accepted[0], delta: deltas[0] },
        ExpectedTrial { branch: Branch::Standard, slot: 5, f: f1, cr: 0.4, donor: d1, crossed: t1, trial: t1, ratio: 0.5, accepted: accepted[1], delta: deltas[1] },
        ExpectedTrial { branch: Branch::Standard, slot: 2, f: f2, cr: 1.0, donor: d2, crossed: c2, trial: t2, ratio: 1.0, accepted: accepted[2], delta: deltas[2] },
        ExpectedTrial { branch: Branch::Eb, slot: 1, f: f3, cr: 0.7, donor: d3, crossed: t3, trial: t3, ratio: 0.5, accepted: accepted[3], delta: deltas[3] },
    ];
    ensure(obs.trials.len() == 4, || format!("{} trials recorded", obs.trials.len()))?;
    for (i, (got, want)) in obs.trials.iter().zip(&expected).enumerate() {
        let tag = |what: &str| format!("trial {i} {what}");
        ensure(got.branch == want.branch, || tag("branch"))?;
        ensure(got.slot == want.slot, || tag("slot"))?;
        close(got.f, want.f, 1e-12, &tag("F"))?;
        close(got.cr, want.cr, 1e-12, &tag("CR"))?;
        ensure(got.donor == want.donor.to_vec(), || format!("{}: {:?} vs {:?}", tag("donor"), got.donor, want.donor))?;
        ensure(got.crossed == want.crossed.to_vec(), || format!("{}: {:?} vs {:?}", tag("crossed"), got.crossed, want.crossed))?;
        ensure(got.trial == want.trial.to_vec(), || format!("{}: {:?} vs {:?}", tag("repaired"), got.trial, want.trial))?;
        close(got.realized_ratio, want.ratio, 1e-12, &tag("ratio"))?;
        ensure(got.accepted == want.accepted, || tag("acceptance"))?;
        close(got.delta, want.delta, 1e-12, &tag("delta"))?;
        close(got.evaluation.f, f_of(want.trial), 1e-12, &tag("objective"))?;
        close(got.evaluation.phi, phi_of(want.trial), 1e-12, &tag("violation"))?;
    }

    // Synchronous write-back, pool ring filled from position 0.
    let front: Vec<Vec<f64>> = st.front.iter().map(|m| m.x.clone()).collect();
    ensure(front == vec![t0.to_vec(), x1.to_vec(), t2.to_vec(), t3.to_vec()], || format!("front {front:?}"))?;
    let pool: Vec<Vec<f64>> = st.pool.iter().map(|m| m.x.clone()).collect();
    ensure(pool == vec![t0.to_vec(), t2.to_vec(), t3.to_vec(), x3.to_vec()], || format!("pool {pool:?}"))?;
    ensure(st.pool_write == 3, || "pool write position".into())?;

    // SR = 3/4; memory slot 0 from the weighted Lehmer means.
    close(st.adapt.success_rate, 0.75, 1e-12, "success rate")?;
    let succ: Vec<(f64, f64, f64)> = (0..4)
        .filter(|&i| accepted[i] && deltas[i] > 0.0)
        .map(|i| (expected[i].f, expected[i].ratio, deltas[i]))
        .collect();
    let dsum: f64 = succ.iter().map(|s| s.2).sum();
    let lehmer = |pick: fn(&(f64, f64, f64)) -> f64| {
        let num: f64 = succ.iter().map(|s| s.2 / dsum * pick(s) * pick(s)).sum();
        let den: f64 = succ.iter().map(|s| s.2 / dsum * pick(s)).sum();
        num / den
    };
    close(st.bank.m_f(0), 0.5 * (0.3 + lehmer(|s| s.0)), 1e-12, "M_F[0]")?;
    close(st.bank.m_cr(0), 0.5 * (1.0 + lehmer(|s| s.1)), 1e-12, "M_CR[0]")?;
    for k in 1..5 {
        close(st.bank.m_f(k), 0.3, 0.0, "untouched M_F")?;
        close(st.bank.m_cr(k), 1.0, 0.0, "untouched M_CR")?;
    }
    ensure(st.bank.write_pos() == 1, || "memory write position".into())?;

    // ρ = ΔEB / (ΔEB + Δstd).
    let d_eb = deltas[0] + deltas[3];
    let d_std = deltas[1] + deltas[2];
    close(st.adapt.hybrid_rate, d_eb / (d_eb + d_std), 1e-12, "hybrid rate")?;
    ensure(st.front.len() == 4 && summary.nfe_end == 8, || "front size / nfe".into())?;
    ensure(rng.remaining() == 0, || format!("{} scripted draws unused", rng.remaining()))?;
    Ok(format!("4 trials, rho = {:.6}, M_F[0] = {:.6}", st.adapt.hybrid_rate, st.bank.m_f(0)))
}

// ---------------------------------------------------------------------------
// Full-run invariants.

#[derive(Default)]
pub struct InvariantObserver {
    pub max_fe: u64,
    pub n0: usize,
    pub n_min: usize,
    pub acceptances: usize,
    pub rejections: usize,
    pub generations: usize,
    pub late_generations: usize,
    pub n_eb: usize,
    pub n_standard: usize,
    pub last_front: usize,
    pub failures: Vec<String>,
}

impl InvariantObserver {
    fn new(max_fe: u64, n0: usize, n_min: usize) -> Self {
        Self { max_fe, n0, n_min, ..Self::default() }
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 10 {
            self.failures.push(msg);
        }
    }
}

/// `floor(n0 + (n_min - n0) nfe / max_fe)` via floor division of the
/// numerator `n0 max_fe - (n0 - n_min) nfe`.
pub fn expected_front_size(n0: usize, n_min: usize, nfe: u64, max_fe: u64) -> usize {
    let num = n0 as i128 * max_fe as i128 - (n0 - n_min) as i128 * nfe as i128;
    let size = num.div_euclid(max_fe as i128);
    size.clamp(n_min as i128, n0 as i128) as usize
}

impl Observer for InvariantObserver {
    fn on_trial(&mut self, t: &TrialRecord) {
        let trunc = |p: f64| if p <= t.epsilon { 0.0 } else { p };
        let tp = trunc(t.evaluation.phi);
        if tp != t.trial_phi_trunc {
            self.fail(format!("trial truncated violation {} vs {}", t.trial_phi_trunc, tp));
        }
        let rule = tp < t.parent_phi_trunc || (tp == t.parent_phi_trunc && t.evaluation.f <= t.parent_f);
        if rule != t.accepted {
            self.fail(format!(
                "decision {} but parent ({}, {}) trial ({}, {})",
                t.accepted, t.parent_phi_trunc, t.parent_f, tp, t.evaluation.f
            ));
        }
        if t.accepted {
            self.acceptances += 1;
        } else {
            self.rejections += 1;
        }
    }

    fn on_generation(&mut self, s: &GenerationSummary) {
        self.generations += 1;
        self.n_eb += s.n_eb;
        self.n_standard += s.n_standard;
        if 5 * s.nfe_start > 4 * self.max_fe {
            self.late_generations += 1;
            if s.epsilon.epsilon != 0.0 {
                self.fail(format!("epsilon {} at nfe {}", s.epsilon.epsilon, s.nfe_start));
            }
        }
        let want = expected_front_size(self.n0, self.n_min, s.nfe_end, self.max_fe);
        if s.front_size_after != want {
            self.fail(format!("front {} at nfe {}, expected {want}", s.front_size_after, s.nfe_end));
        }
        self.last_front = s.front_size_after;
    }
}

pub fn observe_run(config: &EngineConfig, problem: &ProblemSpec, max_fe: u64) -> Result<InvariantObserver, String> {
    let schedule = plan_checkpoints(max_fe, 100).map_err(|e| e.to_string())?;
    let mut obs = InvariantObserver::new(max_fe, config.n0, config.n_min);
    engine::run_with(config, problem, &schedule, SeededSource::new(config.seed), &mut obs).map_err(|e| e.to_string())?;
    Ok(obs)
}

/// Every built-in problem under the default protocol (one seed each).
pub fn selection_and_schedule_invariants() -> Result<(usize, usize, usize), String> {
    let mut totals = (0usize, 0usize, 0usize);
    for name in suite::list_problems() {
        let dim = if name == "rosenbrock-cubic-line" { 2 } else { 10 };
        let entry = suite::get_problem(name, dim).map_err(|e| e.to_string())?;
        let config = EngineConfig { seed: 11, ..EngineConfig::default() };
        let max_fe = 20_000 * dim as u64;
        let obs = observe_run(&config, &entry.spec, max_fe)?;
        if let Some(f) = obs.failures.first() {
            return Err(format!("{name}: {f}"));
        }
        if obs.last_front != config.n_min {
            return Err(format!("{name}: final front {} instead of {}", obs.last_front, config.n_min));
        }
        if obs.late_generations == 0 {
            return Err(format!("{name}: no generation after 80% of the budget"));
        }
        totals.0 += obs.acceptances;
        totals.1 += obs.generations;
        totals.2 += obs.late_generations;
    }
    Ok(totals)
}

// ---------------------------------------------------------------------------
// Statistics oracles.

/// Two-sided rank-sum p-value by recursive enumeration of all
/// `C(n + m, n)` label assignments on the pooled midranks.
pub fn brute_force_rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let len = pooled.len();
    let ranks: Vec<f64> = pooled
        .iter()
        .map(|&v| {
            let below = pooled.iter().filter(|&&w| w < v).count() as f64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let n = a.len();
    let expected = n as f64 * (len as f64 + 1.0) / 2.0;
    let observed: f64 = ranks[..n].iter().sum();
    let bar = (observed - expected).abs() - 1e-9;

    #[allow(clippy::too_many_arguments)]
    fn walk(ranks: &[f64], start: usize, left: usize, sum: f64, expected: f64, bar: f64, hits: &mut u64, all: &mut u64) {
        if left == 0 {
            *all += 1;
            if (sum - expected).abs() >= bar {
                *hits += 1;
            }
            return;
        }
        for k in start..=ranks.len() - left {
            walk(ranks, k + 1, left - 1, sum + ranks[k], expected, bar, hits, all);
        }
    }
    let (mut hits, mut all) = (0u64, 0u64);
    walk(&ranks, 0, n, 0.0, expected, bar, &mut hits, &mut all);
    hits as f64 / all as f64
}

pub fn random_sample(rng: &mut ChaCha8Rng, len: usize, tied: bool) -> Vec<f64> {
    (0..len)
        .map(|_| if tied { rng.random_range(0..5) as f64 } else { rng.random::<f64>() * 100.0 })
        .collect()
}

/// 200 randomized cases with `|a| + |b| <= 16`, half of them tied.
pub fn wilcoxon_matches_enumeration(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=16 - n);
        let tied = case % 2 == 1;
        let a = random_sample(&mut rng, n, tied);
        let b = random_sample(&mut rng, m, tied);
        let p = wilcoxon_rank_sum(&a, &b, 0.05).map_err(|e| e.to_string())?.p_value;
        let exact = brute_force_rank_sum_p(&a, &b);
        worst = worst.max((p - exact).abs());
        if (p - exact).abs() > 0.02 {
            return Err(format!("case {case}: p = {p}, enumeration = {exact}, a = {a:?}, b = {b:?}"));
        }
    }
    Ok(worst)
}

pub fn a12_matches_counting(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..200 {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(1..=12);
        let a = random_sample(&mut rng, n, case % 2 == 1);
        let b = random_sample(&mut rng, m, case % 2 == 1);
        let mut wins = 0u64;
        let mut ties = 0u64;
        for x in &a {
            for y in &b {
                if y > x {
                    wins += 1;
                } else if y == x {
                    ties += 1;
                }
            }
        }
        let want = (wins as f64 + 0.5 * ties as f64) / (n * m) as f64;
        let got = vargha_delaney_a12(&a, &b).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("case {case}: A12 {got} vs {want}"));
        }
    }
    Ok(())
}

pub fn flat_trace(points: usize, f: f64) -> RunTrace {
    RunTrace {
        problem: "flat".into(),
        run_id: 0,
        seed: 0,
        dim: 1,
        max_fe: 10 * points as u64,
        points: (1..=points)
            .map(|k| CheckpointRecord { checkpoint: k, nfe: 10 * k as u64, best_f: f, best_cv: 0.0 })
            .collect(),
        final_f: f,
        final_cv: 0.0,
    }
}

pub fn ttt_and_auc_edges() -> Result<(), String> {
    let t = flat_trace(2000, 3.0);
    let ttt = time_to_target(&t, 1.0, 4.0);
    ensure(ttt == 2001, || format!("TTT never reached = {ttt}"))?;
    let a = auc(&t, 3.0);
    ensure(a == 0.0, || format!("AUC pinned = {a}"))
}

// ---------------------------------------------------------------------------
// Harness determinism.

pub fn dir_payload(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("readable"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn small_plan(out: &Path, runs: u64, jobs: usize) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(vec!["sphere-eq".into(), "mixed-eq-ineq".into()], 4, out);
    plan.runs_per_problem = runs;
    plan.max_fe = 4000;
    plan.n_checkpoints = 50;
    plan.base_seed = 7;
    plan.engine.n0 = 40;
    plan.jobs = jobs;
    plan
}

pub fn determinism_and_resume(root: &Path) -> Check {
    let a = root.join("a");
    let b = root.join("b");
    let c = root.join("c");
    let run = |p: &ExperimentPlan| run_experiment(p).map_err(|e| e.to_string());

    run(&small_plan(&a, 4, 1))?;
    run(&small_plan(&b, 4, 3))?;
    let pa = dir_payload(&a)?;
    ensure(pa.len() == 8, || format!("{} trace files", pa.len()))?;
    ensure(pa == dir_payload(&b)?, || "sequential and parallel payloads differ".into())?;

    // interrupted after half the runs, then resumed
    let half = run(&small_plan(&c, 2, 1))?;
    ensure(half.executed == 4, || "first half".into())?;
    let rest = run(&small_plan(&c, 4, 1))?;
    ensure(rest.executed == 4 && rest.resumed == 4, || format!("resume executed {}", rest.executed))?;
    ensure(pa == dir_payload(&c)?, || "resumed payloads differ".into())?;

    let again = run(&small_plan(&a, 4, 1))?;
    ensure(again.executed == 0, || "complete plan re-executed runs".into())?;
    Ok("8 traces byte-identical across sequential, parallel and resumed execution".into())
}
