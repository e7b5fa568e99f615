mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdex_core::constraint::{mean_violation, ViolationConfig};
use rdex_core::engine::EngineConfig;
use rdex_core::suite;

#[test]
fn selection_and_schedule_hold_over_full_runs() {
    let (acceptances, generations, late) =
        common::selection_and_schedule_invariants().unwrap_or_else(|e| panic!("{e}"));
    assert!(acceptances >= 100_000, "only {acceptances} acceptance events");
    assert!(generations > late && late > 0);
}

#[test]
fn front_size_formula_examples() {
    assert_eq!(common::expected_front_size(600, 4, 0, 600_000), 600);
    assert_eq!(common::expected_front_size(600, 4, 300_000, 600_000), 302);
    assert_eq!(common::expected_front_size(600, 4, 600_000, 600_000), 4);
}

#[test]
fn pinned_hybrid_rate_gives_pure_branches() {
    let entry = suite::get_problem("mixed-eq-ineq", 5).unwrap();
    for (rate, want_eb) in [(0.0, false), (1.0, true)] {
        let config = EngineConfig { n0: 60, seed: 3, fixed_hybrid_rate: Some(rate), ..EngineConfig::default() };
        let obs = common::observe_run(&config, &entry.spec, 20_000).unwrap();
        assert!(obs.failures.is_empty(), "{:?}", obs.failures);
        if want_eb {
            assert_eq!(obs.n_standard, 0);
            assert!(obs.n_eb > 0);
        } else {
            assert_eq!(obs.n_eb, 0);
            assert!(obs.n_standard > 0);
        }
    }
}

#[test]
fn evaluated_points_stay_in_the_box() {
    let entry = suite::get_problem("rastrigin-box-linear", 6).unwrap();
    let config = EngineConfig { n0: 50, seed: 9, ..EngineConfig::default() };
    let mut obs = common::Collector::default();
    let schedule = rdex_core::trace::plan_checkpoints(10_000, 20).unwrap();
    rdex_core::engine::run_with(&config, &entry.spec, &schedule, rdex_core::rng::SeededSource::new(9), &mut obs)
        .unwrap();
    for t in &obs.trials {
        assert!(entry.spec.in_bounds(&t.trial).unwrap());
        assert!(t.cr >= 0.0 && t.cr <= 1.0 && t.f > 0.0 && t.f <= 1.0);
    }
}

/// Random search followed by coordinate-descent polish finds nothing
/// feasible below the stated optimum of the equality-constrained problems.
#[test]
fn brute_force_finds_nothing_below_equality_optima() {
    let cfg = ViolationConfig::default();
    for (name, dim) in [("sphere-eq", 4), ("mixed-eq-ineq", 4)] {
        let entry = suite::get_problem(name, dim).unwrap();
        let known = entry.known_optimum_f.unwrap();
        let spec = &entry.spec;
        let feasible_f = |x: &[f64]| {
            let raw = spec.evaluate_unmetered(x).unwrap();
            (mean_violation(&raw, &cfg) == 0.0).then_some(raw.objective)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
        for _ in 0..1_000_000 {
            let x: Vec<f64> = (0..dim).map(|k| rng.random_range(spec.lower[k]..spec.upper[k])).collect();
            if let Some(f) = feasible_f(&x) {
                best.push((f, x));
            }
        }
        best.sort_by(|a, b| a.0.total_cmp(&b.0));
        best.truncate(20);
        let mut overall = f64::INFINITY;
        for (mut f, mut x) in best {
            let mut step = 0.1;
            while step > 1e-9 {
                let mut moved = false;
                for k in 0..dim {
                    for dir in [-1.0, 1.0] {
                        let mut y = x.clone();
                        y[k] = (y[k] + dir * step).clamp(spec.lower[k], spec.upper[k]);
                        if let Some(fy) = feasible_f(&y) {
                            if fy < f {
                                (f, x, moved) = (fy, y, true);
                            }
                        }
                    }
                }
                if !moved {
                    step /= 2.0;
                }
            }
            overall = overall.min(f);
        }
        assert!(overall >= known - 1e-6, "{name}: found {overall} below {known}");
    }
}
