//! Seeded experiment batches.
//!
//! Run `r` of a plan uses seed `base_seed + r`. Each finished run is written
//! to its own trace file straight away, so an interrupted experiment resumes
//! by skipping every (problem, run) whose trace is already complete.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::parse_key_values;
use crate::constraint::feasibility_aware_quality;
use crate::engine::{self, EngineConfig};
use crate::error::{Error, Result};
use crate::metrics::quality_offsets;
use crate::stats::median;
use crate::suite;
use crate::trace::{plan_checkpoints, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub problems: Vec<String>,
    pub dim: usize,
    pub runs_per_problem: u64,
    pub max_fe: u64,
    pub n_checkpoints: usize,
    pub base_seed: u64,
    pub engine: EngineConfig,
    pub output_dir: PathBuf,
    /// Concurrent runs; 1 keeps execution sequential.
    pub jobs: usize,
}

impl ExperimentPlan {
    /// Protocol defaults: 25 runs, `20000 * D` evaluations, 2000 checkpoints.
    pub fn new(problems: Vec<String>, dim: usize, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            problems,
            dim,
            runs_per_problem: 25,
            max_fe: 20_000 * dim as u64,
            n_checkpoints: 2000,
            base_seed: 0,
            engine: EngineConfig::default(),
            output_dir: output_dir.into(),
            jobs: 1,
        }
    }

    pub fn seed_for(&self, run_id: u64) -> u64 {
        self.base_seed.wrapping_add(run_id)
    }

    /// Builds a plan from an optional flat key-value file followed by
    /// `overrides`, which win over file keys. Keys are the field names of
    /// [`ExperimentPlan`] and [`EngineConfig`] (`eps_eq`/`eta` for the
    /// violation settings). `dim` defaults to 10 and `max_fe` to
    /// `20000 * dim`.
    pub fn from_settings(config: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut plan = Self::new(Vec::new(), 10, PathBuf::from("traces"));
        let mut max_fe_set = false;
        if let Some(path) = config {
            let text = fs::read_to_string(path)?;
            for e in parse_key_values(&text, path)? {
                max_fe_set |= e.key == "max_fe";
                plan.set(&e.key, &e.value).map_err(|msg| Error::Parse {
                    path: path.to_path_buf(),
                    line: e.line,
                    msg,
                })?;
            }
        }
        for (key, value) in overrides {
            max_fe_set |= *key == "max_fe";
            plan.set(key, value).map_err(Error::InvalidConfig)?;
        }
        if !max_fe_set {
            plan.max_fe = 20_000 * plan.dim as u64;
        }
        Ok(plan)
    }

    /// Sets one key; the error is a human-readable message.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.trim().parse().map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        let v = value.trim();
        match key {
            "problems" => {
                self.problems = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            "dim" => self.dim = num(key, v)?,
            "runs_per_problem" => self.runs_per_problem = num(key, v)?,
            "max_fe" => self.max_fe = num(key, v)?,
            "n_checkpoints" => self.n_checkpoints = num(key, v)?,
            "base_seed" => self.base_seed = num(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "jobs" => self.jobs = num(key, v)?,
            "n0" => self.engine.n0 = num(key, v)?,
            "n_min" => self.engine.n_min = num(key, v)?,
            "memory_size" => self.engine.memory_size = num(key, v)?,
            "rho_init" => self.engine.rho_init = num(key, v)?,
            "perturb_prob" => self.engine.perturb_prob = num(key, v)?,
            "perturb_scale" => self.engine.perturb_scale = num(key, v)?,
            "pbest_frac" => self.engine.pbest_frac = num(key, v)?,
            "rank_bias_lambda" => self.engine.rank_bias_lambda = num(key, v)?,
            "eps_eq" => self.engine.violation.eps_eq = num(key, v)?,
            "eta" => self.engine.violation.eta = num(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks everything that can be checked before touching the disk.
    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::InvalidConfig("no problems selected".into()));
        }
        if self.runs_per_problem == 0 {
            return Err(Error::InvalidConfig("runs_per_problem must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        for name in &self.problems {
            suite::get_problem(name, self.dim)?;
        }
        self.engine.validate()?;
        if self.engine.n0 as u64 > self.max_fe {
            return Err(Error::InvalidConfig(format!(
                "max_fe {} is smaller than n0 {}",
                self.max_fe, self.engine.n0
            )));
        }
        plan_checkpoints(self.max_fe, self.n_checkpoints)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// All traces of the plan ordered by (problem order in the plan, run id).
    pub traces: Vec<RunTrace>,
    pub executed: usize,
    pub resumed: usize,
}

fn is_complete(trace: &RunTrace, plan: &ExperimentPlan, problem: &str, run_id: u64) -> bool {
    trace.problem == problem
        && trace.run_id == run_id
        && trace.seed == plan.seed_for(run_id)
        && trace.dim == plan.dim
        && trace.max_fe == plan.max_fe
        && trace.points.len() == plan.n_checkpoints
}

/// Executes the plan, resuming from complete trace files in `output_dir`.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutcome> {
    plan.validate()?;
    let schedule = plan_checkpoints(plan.max_fe, plan.n_checkpoints)?;
    fs::create_dir_all(&plan.output_dir)?;

    let jobs: Vec<(&str, u64)> = plan
        .problems
        .iter()
        .flat_map(|p| (0..plan.runs_per_problem).map(move |r| (p.as_str(), r)))
        .collect();

    let one = |&(problem, run_id): &(&str, u64)| -> Result<(RunTrace, bool)> {
        let path = plan.output_dir.join(RunTrace::file_name(problem, run_id));
        if path.exists() {
            if let Ok(t) = RunTrace::read(&path) {
                if is_complete(&t, plan, problem, run_id) {
                    return Ok((t, false));
                }
            }
        }
        let wrap = |e: Error| Error::RunFailed { problem: problem.to_string(), run_id, source: Box::new(e) };
        let entry = suite::get_problem(problem, plan.dim).map_err(wrap)?;
        let config = EngineConfig { seed: plan.seed_for(run_id), ..plan.engine.clone() };
        let mut trace = engine::run(&config, &entry.spec, &schedule).map_err(wrap)?;
        trace.run_id = run_id;
        trace.write_to_dir(&plan.output_dir).map_err(wrap)?;
        Ok((trace, true))
    };

    let results: Vec<Result<(RunTrace, bool)>> = if plan.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(one).collect())
    } else {
        jobs.iter().map(one).collect()
    };

    let mut outcome = ExperimentOutcome { traces: Vec::with_capacity(jobs.len()), executed: 0, resumed: 0 };
    for r in results {
        let (trace, fresh) = r?;
        if fresh {
            outcome.executed += 1;
        } else {
            outcome.resumed += 1;
        }
        outcome.traces.push(trace);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetDerivation {
    MedianOfBaseline,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub value: f64,
    pub derivation: TargetDerivation,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetTable {
    pub targets: BTreeMap<String, Target>,
}

impl TargetTable {
    pub fn get(&self, problem: &str) -> Option<f64> {
        self.targets.get(problem).map(|t| t.value)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("problem,target\n");
        for (p, t) in &self.targets {
            let _ = writeln!(out, "{p},{:?}", t.value);
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse { path: path.to_path_buf(), line, msg: msg.into() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "problem,target" => {}
            Some((n, _)) => return Err(err(n + 1, "expected header `problem,target`")),
            None => return Err(err(0, "empty target file")),
        }
        let mut table = TargetTable::default();
        for (n, line) in lines {
            let (p, v) = line.split_once(',').ok_or_else(|| err(n + 1, "expected `problem,target`"))?;
            let value: f64 = v.trim().parse().map_err(|_| err(n + 1, "bad target value"))?;
            table
                .targets
                .insert(p.trim().to_string(), Target { value, derivation: TargetDerivation::Explicit });
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Per problem, the median feasibility-aware final quality over the
/// supplied runs, with `B_p` taken from the same runs.
pub fn derive_median_targets(traces: &[RunTrace]) -> Result<TargetTable> {
    if traces.is_empty() {
        return Err(Error::EmptyTraceSet);
    }
    let offsets = quality_offsets(traces);
    let mut qualities: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for t in traces {
        let q = feasibility_aware_quality(t.final_f, t.final_cv, offsets[&t.problem]);
        qualities.entry(t.problem.as_str()).or_default().push(q);
    }
    let targets = qualities
        .into_iter()
        .map(|(p, qs)| {
            let value = median(&qs).expect("at least one run per problem");
            (p.to_string(), Target { value, derivation: TargetDerivation::MedianOfBaseline })
        })
        .collect();
    Ok(TargetTable { targets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::CheckpointRecord;

    fn final_only(problem: &str, run_id: u64, f: f64, cv: f64) -> RunTrace {
        RunTrace {
            problem: problem.into(),
            run_id,
            seed: run_id,
            dim: 2,
            max_fe: 10,
            points: vec![CheckpointRecord { checkpoint: 1, nfe: 10, best_f: f, best_cv: cv }],
            final_f: f,
            final_cv: cv,
        }
    }

    #[test]
    fn median_targets() {
        let odd: Vec<_> = [1.0, 2.0, 3.0].iter().enumerate().map(|(r, &f)| final_only("a", r as u64, f, 0.0)).collect();
        assert_eq!(derive_median_targets(&odd).unwrap().get("a"), Some(2.0));

        let even: Vec<_> =
            [1.0, 2.0, 3.0, 10.0].iter().enumerate().map(|(r, &f)| final_only("a", r as u64, f, 0.0)).collect();
        assert_eq!(derive_median_targets(&even).unwrap().get("a"), Some(2.5));

        // B_p = 4 + 1 = 5; qualities 5.1, 5.2, 5.3
        let infeasible = vec![final_only("b", 0, 4.0, 0.1), final_only("b", 1, 2.0, 0.2), final_only("b", 2, 3.0, 0.3)];
        let t = derive_median_targets(&infeasible).unwrap();
        assert!((t.get("b").unwrap() - 5.2).abs() < 1e-12);
        assert_eq!(t.targets["b"].derivation, TargetDerivation::MedianOfBaseline);

        assert!(matches!(derive_median_targets(&[]), Err(Error::EmptyTraceSet)));
    }

    #[test]
    fn target_file_round_trip() {
        let t = derive_median_targets(&[final_only("x", 0, 0.1 + 0.2, 0.0), final_only("y", 0, -3.0, 0.0)]).unwrap();
        let back = TargetTable::from_csv(&t.to_csv(), Path::new("t.csv")).unwrap();
        assert_eq!(back.get("x"), Some(0.1 + 0.2));
        assert_eq!(back.get("y"), Some(-3.0));
        assert_eq!(back.targets["x"].derivation, TargetDerivation::Explicit);
        assert!(TargetTable::from_csv("nope\n", Path::new("t.csv")).is_err());
    }

    #[test]
    fn plan_keys() {
        let mut plan = ExperimentPlan::new(vec![], 4, "out");
        assert_eq!(plan.max_fe, 80_000);
        plan.set("problems", "sphere-eq, sphere").unwrap();
        plan.set("n0", "50").unwrap();
        plan.set("eps_eq", "1e-6").unwrap();
        assert_eq!(plan.problems, vec!["sphere-eq", "sphere"]);
        assert_eq!(plan.engine.n0, 50);
        assert_eq!(plan.engine.violation.eps_eq, 1e-6);
        assert!(plan.set("bogus", "1").is_err());
        assert!(plan.set("dim", "four").is_err());
        assert_eq!(plan.seed_for(3), 3);
    }

    #[test]
    fn plan_validation_catches_unknown_problem() {
        let plan = ExperimentPlan::new(vec!["nope".into()], 4, "out");
        assert!(matches!(plan.validate(), Err(Error::UnknownProblem(_))));
    }
}
