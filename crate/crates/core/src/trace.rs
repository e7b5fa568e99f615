//! Checkpoint schedules, run traces and the per-run trace file format.
//!
//! A trace file looks like
//!
//! ```text
//! # problem,run,seed,D,max_fe,n_checkpoints
//! # sphere-eq,0,7,4,20000,2000
//! checkpoint,nfe,best_f,best_cv
//! 1,10,3.5218,0.41
//! ...
//! ```
//!
//! Reals are written in shortest round-trip form, so a trace parses back
//! bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const TRACE_KEYS: &str = "# problem,run,seed,D,max_fe,n_checkpoints";
pub const TRACE_COLUMNS: &str = "checkpoint,nfe,best_f,best_cv";

/// Strictly increasing evaluation counts `ceil(c * max_fe / n)`, `c = 1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointSchedule {
    max_fe: u64,
    thresholds: Vec<u64>,
}

impl CheckpointSchedule {
    pub fn new(max_fe: u64, n: usize) -> Result<Self> {
        plan_checkpoints(max_fe, n)
    }

    pub fn max_fe(&self) -> u64 {
        self.max_fe
    }

    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

pub fn plan_checkpoints(max_fe: u64, n: usize) -> Result<CheckpointSchedule> {
    if n == 0 || max_fe < n as u64 {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= n_checkpoints <= max_fe, got n = {n}, max_fe = {max_fe}"
        )));
    }
    let thresholds = (1..=n as u128)
        .map(|c| (c * max_fe as u128).div_ceil(n as u128) as u64)
        .collect();
    Ok(CheckpointSchedule { max_fe, thresholds })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRecord {
    /// 1-based.
    pub checkpoint: usize,
    pub nfe: u64,
    pub best_f: f64,
    pub best_cv: f64,
}

/// Best-so-far (objective, violation) at every checkpoint of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub problem: String,
    pub run_id: u64,
    pub seed: u64,
    pub dim: usize,
    pub max_fe: u64,
    pub points: Vec<CheckpointRecord>,
    pub final_f: f64,
    pub final_cv: f64,
}

impl RunTrace {
    pub fn n_checkpoints(&self) -> usize {
        self.points.len()
    }

    pub fn file_name(problem: &str, run_id: u64) -> String {
        format!("{problem}.run{run_id:03}.csv")
    }

    /// Checks the structural invariants: consecutive 1-based indices and a
    /// lexicographically non-increasing (cv, f) incumbent.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(format!("trace {}#{}: {msg}", self.problem, self.run_id)));
        if self.points.is_empty() {
            return fail("no checkpoints".into());
        }
        for (k, w) in self.points.iter().enumerate() {
            if w.checkpoint != k + 1 {
                return fail(format!("checkpoint {} at position {}", w.checkpoint, k + 1));
            }
        }
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let worse = b.best_cv > a.best_cv || (b.best_cv == a.best_cv && b.best_f > a.best_f);
            if worse || b.nfe <= a.nfe {
                return fail(format!("checkpoint {} regresses", b.checkpoint));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + 48 * self.points.len());
        out.push_str(TRACE_KEYS);
        out.push('\n');
        let _ = writeln!(
            out,
            "# {},{},{},{},{},{}",
            self.problem,
            self.run_id,
            self.seed,
            self.dim,
            self.max_fe,
            self.points.len()
        );
        out.push_str(TRACE_COLUMNS);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{},{},{:?},{:?}", p.checkpoint, p.nfe, p.best_f, p.best_cv);
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse { path: path.to_path_buf(), line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("missing {what}")));

        let (n, keys) = next("key line")?;
        if keys.trim() != TRACE_KEYS {
            return Err(err(n + 1, "unexpected key line"));
        }
        let (n, values) = next("header values")?;
        let fields: Vec<&str> = values
            .strip_prefix('#')
            .ok_or_else(|| err(n + 1, "header values must start with '#'"))?
            .trim()
            .split(',')
            .collect();
        if fields.len() != 6 {
            return Err(err(n + 1, "expected 6 header fields"));
        }
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| err(n + 1, "bad integer in header"));
        let problem = fields[0].trim().to_string();
        let (run_id, seed, dim, max_fe, n_checkpoints) =
            (num(fields[1])?, num(fields[2])?, num(fields[3])? as usize, num(fields[4])?, num(fields[5])? as usize);

        let (n, cols) = next("column line")?;
        if cols.trim() != TRACE_COLUMNS {
            return Err(err(n + 1, "unexpected column line"));
        }
        let mut points = Vec::with_capacity(n_checkpoints);
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(err(n + 1, "expected 4 columns"));
            }
            let bad = || err(n + 1, "bad number");
            points.push(CheckpointRecord {
                checkpoint: cells[0].trim().parse().map_err(|_| bad())?,
                nfe: cells[1].trim().parse().map_err(|_| bad())?,
                best_f: cells[2].trim().parse().map_err(|_| bad())?,
                best_cv: cells[3].trim().parse().map_err(|_| bad())?,
            });
        }
        if points.len() != n_checkpoints {
            return Err(err(0, &format!("expected {n_checkpoints} checkpoints, found {}", points.len())));
        }
        let last = *points.last().ok_or_else(|| err(0, "no checkpoints"))?;
        let trace = RunTrace {
            problem,
            run_id,
            seed,
            dim,
            max_fe,
            points,
            final_f: last.best_f,
            final_cv: last.best_cv,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Writes atomically: a temporary sibling is renamed into place so a
    /// crash never leaves a truncated trace behind.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(Self::file_name(&self.problem, self.run_id));
        let tmp = dir.join(format!(".{}.tmp", Self::file_name(&self.problem, self.run_id)));
        fs::write(&tmp, self.to_csv())?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv(&text, path)
    }
}

/// Reads every `*.csv` trace in `dir`, sorted by (problem, run).
pub fn read_trace_dir(dir: &Path) -> Result<Vec<RunTrace>> {
    let mut traces = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_trace = path.extension().is_some_and(|e| e == "csv")
            && path.file_name().is_some_and(|n| !n.to_string_lossy().starts_with('.'));
        if is_trace {
            traces.push(RunTrace::read(&path)?);
        }
    }
    traces.sort_by(|a, b| a.problem.cmp(&b.problem).then(a.run_id.cmp(&b.run_id)));
    Ok(traces)
}
