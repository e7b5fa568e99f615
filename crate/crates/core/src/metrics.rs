//! Per-run metrics: feasibility-aware final quality, time-to-target and the
//! anytime AUC.

use std::collections::BTreeMap;

use crate::constraint::{feasibility_aware_quality, quality_offset};
use crate::error::{Error, Result};
use crate::harness::TargetTable;
use crate::trace::RunTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub problem: String,
    pub algorithm: String,
    pub run_id: u64,
    pub quality: f64,
    /// In `1..=n_checkpoints + 1`; `n_checkpoints + 1` means never reached.
    pub ttt: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Quality,
    Ttt,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Quality, Metric::Ttt, Metric::Auc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Quality => "Q",
            Metric::Ttt => "TTT",
            Metric::Auc => "AUC",
        }
    }

    pub fn value(self, row: &MetricRow) -> f64 {
        match self {
            Metric::Quality => row.quality,
            Metric::Ttt => row.ttt as f64,
            Metric::Auc => row.auc,
        }
    }
}

/// First checkpoint whose feasibility-aware quality is at or below
/// `target`; `n_checkpoints + 1` if there is none.
pub fn time_to_target(trace: &RunTrace, target: f64, b_p: f64) -> usize {
    trace
        .points
        .iter()
        .find(|p| feasibility_aware_quality(p.best_f, p.best_cv, b_p) <= target)
        .map_or(trace.points.len() + 1, |p| p.checkpoint)
}

/// Mean over checkpoints of `log10(1 + max(f_t - target, 0))`.
pub fn auc(trace: &RunTrace, target: f64) -> f64 {
    if trace.points.is_empty() {
        return 0.0;
    }
    let total: f64 = trace
        .points
        .iter()
        .map(|p| (1.0 + (p.best_f - target).max(0.0)).log10())
        .sum();
    total / trace.points.len() as f64
}

/// `B_p` per problem over every supplied trace.
pub fn quality_offsets<'a>(traces: impl IntoIterator<Item = &'a RunTrace>) -> BTreeMap<String, f64> {
    let mut finals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for t in traces {
        finals.entry(t.problem.clone()).or_default().push(t.final_f);
    }
    finals.into_iter().map(|(p, fs)| (p, quality_offset(fs))).collect()
}

/// Metric rows for labelled trace sets. `B_p` is shared across all
/// algorithms on the same problem.
pub fn metric_rows(sets: &[(String, Vec<RunTrace>)], targets: &TargetTable) -> Result<Vec<MetricRow>> {
    let offsets = quality_offsets(sets.iter().flat_map(|(_, ts)| ts.iter()));
    let mut rows = Vec::new();
    for (algorithm, traces) in sets {
        for t in traces {
            let b_p = offsets[&t.problem];
            let target = targets
                .get(&t.problem)
                .ok_or_else(|| Error::MismatchedProblems(format!("no target for problem `{}`", t.problem)))?;
            rows.push(MetricRow {
                problem: t.problem.clone(),
                algorithm: algorithm.clone(),
                run_id: t.run_id,
                quality: feasibility_aware_quality(t.final_f, t.final_cv, b_p),
                ttt: time_to_target(t, target, b_p),
                auc: auc(t, target),
            });
        }
    }
    Ok(rows)
}
