//! Cross-algorithm reports: per-problem mean/SD tables with rank-sum
//! verdicts against the first algorithm, W/T/L totals (raw and
//! Holm-corrected across problems), median A12 and a Friedman block per
//! metric.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{TargetDerivation, TargetTable};
use crate::metrics::{Metric, MetricRow};
use crate::stats::{self, FriedmanResult, Verdict};

/// One problem × competitor × metric comparison, from the first
/// algorithm's point of view.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub problem: String,
    pub metric: Metric,
    pub competitor: String,
    pub ours_mean: f64,
    pub ours_sd: f64,
    pub theirs_mean: f64,
    pub theirs_sd: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub holm_verdict: Verdict,
    pub a12: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl Tally {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Win => self.wins += 1,
            Verdict::Tie => self.ties += 1,
            Verdict::Loss => self.losses += 1,
        }
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.wins, self.ties, self.losses)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorSummary {
    pub competitor: String,
    pub metric: Metric,
    pub raw: Tally,
    pub holm: Tally,
    pub median_a12: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatReport {
    pub alpha: f64,
    /// First entry is the reference algorithm.
    pub algorithms: Vec<String>,
    pub problems: Vec<String>,
    /// `[metric][problem][algorithm]` mean and SD.
    pub tables: BTreeMap<Metric, Vec<Vec<(f64, f64)>>>,
    pub comparisons: Vec<Comparison>,
    pub summaries: Vec<CompetitorSummary>,
    /// `None` when fewer than two problems are present.
    pub friedman: BTreeMap<Metric, Option<FriedmanResult>>,
    pub derived_targets: bool,
}

pub const CSV_HEADER: &str =
    "problem,metric,algorithm,competitor,ours_mean,ours_sd,theirs_mean,theirs_sd,statistic,p_value,verdict,holm_verdict,a12";

pub fn build_report(rows: &[MetricRow], targets: &TargetTable, alpha: f64) -> Result<StatReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut algorithms: Vec<String> = Vec::new();
    let mut samples: BTreeMap<(&str, &str), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
        samples.entry((r.algorithm.as_str(), r.problem.as_str())).or_default().push(r);
    }
    if algorithms.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a report needs at least two algorithms, got {}",
            algorithms.len()
        )));
    }
    let problems_of = |alg: &str| -> Vec<String> {
        samples.keys().filter(|(a, _)| *a == alg).map(|(_, p)| p.to_string()).collect()
    };
    let problems = problems_of(&algorithms[0]);
    for alg in &algorithms[1..] {
        if problems_of(alg) != problems {
            return Err(Error::MismatchedProblems(format!(
                "`{}` covers {:?} but `{alg}` covers {:?}",
                algorithms[0],
                problems,
                problems_of(alg)
            )));
        }
    }
    for p in &problems {
        if targets.get(p).is_none() {
            return Err(Error::MismatchedProblems(format!("no target for problem `{p}`")));
        }
    }
    let values = |alg: &str, p: &str, m: Metric| -> Vec<f64> {
        samples[&(alg, p)].iter().map(|r| m.value(r)).collect()
    };

    let mut tables = BTreeMap::new();
    let mut friedman = BTreeMap::new();
    for m in Metric::ALL {
        let table: Vec<Vec<(f64, f64)>> = problems
            .iter()
            .map(|p| {
                algorithms
                    .iter()
                    .map(|a| {
                        let v = values(a, p, m);
                        (stats::mean(&v), stats::std_dev(&v))
                    })
                    .collect()
            })
            .collect();
        tables.insert(m, table);
        let medians: Vec<Vec<f64>> = problems
            .iter()
            .map(|p| algorithms.iter().map(|a| stats::median(&values(a, p, m)).expect("non-empty")).collect())
            .collect();
        let f = if problems.len() >= 2 { Some(stats::friedman(&medians)?) } else { None };
        friedman.insert(m, f);
    }

    let ours = &algorithms[0];
    let mut comparisons = Vec::new();
    let mut summaries = Vec::new();
    for competitor in &algorithms[1..] {
        for m in Metric::ALL {
            let start = comparisons.len();
            for (pi, p) in problems.iter().enumerate() {
                let a = values(ours, p, m);
                let b = values(competitor, p, m);
                let t = stats::wilcoxon_rank_sum(&a, &b, alpha)?;
                let row = &tables[&m][pi];
                comparisons.push(Comparison {
                    problem: p.clone(),
                    metric: m,
                    competitor: competitor.clone(),
                    ours_mean: row[0].0,
                    ours_sd: row[0].1,
                    theirs_mean: row[algorithms.iter().position(|x| x == competitor).expect("known")].0,
                    theirs_sd: row[algorithms.iter().position(|x| x == competitor).expect("known")].1,
                    statistic: t.statistic,
                    p_value: t.p_value,
                    verdict: t.verdict,
                    holm_verdict: Verdict::Tie,
                    a12: t.a12,
                });
            }
            let block = &mut comparisons[start..];
            let p_values: Vec<f64> = block.iter().map(|c| c.p_value).collect();
            let reject = stats::holm_correct(&p_values, alpha);
            let mut raw = Tally::default();
            let mut holm = Tally::default();
            for (c, rej) in block.iter_mut().zip(reject) {
                c.holm_verdict = if rej { c.verdict } else { Verdict::Tie };
                raw.add(c.verdict);
                holm.add(c.holm_verdict);
            }
            let a12s: Vec<f64> = block.iter().map(|c| c.a12).collect();
            summaries.push(CompetitorSummary {
                competitor: competitor.clone(),
                metric: m,
                raw,
                holm,
                median_a12: stats::median(&a12s).expect("non-empty"),
            });
        }
    }

    let derived_targets = problems
        .iter()
        .any(|p| targets.targets.get(p).is_some_and(|t| t.derivation == TargetDerivation::MedianOfBaseline));

    Ok(StatReport { alpha, algorithms, problems, tables, comparisons, summaries, friedman, derived_targets })
}

impl StatReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{:?}",
                c.problem,
                c.metric.name(),
                self.algorithms[0],
                c.competitor,
                c.ours_mean,
                c.ours_sd,
                c.theirs_mean,
                c.theirs_sd,
                c.statistic,
                c.p_value,
                c.verdict.symbol(),
                c.holm_verdict.symbol(),
                c.a12
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "reference algorithm: {}", self.algorithms[0]);
        let _ = writeln!(out, "alpha: {}", self.alpha);
        if self.derived_targets {
            let _ = writeln!(out, "targets: median final quality of the supplied runs (self-baseline stand-in)");
        } else {
            let _ = writeln!(out, "targets: explicit target file");
        }
        let pw = self.problems.iter().map(String::len).max().unwrap_or(0).max("W/T/L (Holm)".len());
        for m in Metric::ALL {
            let _ = writeln!(out, "\n== {} ==", m.name());
            let _ = write!(out, "{:<pw$}", "problem");
            for a in &self.algorithms {
                let _ = write!(out, "  {:>26}", a);
            }
            out.push('\n');
            for (pi, p) in self.problems.iter().enumerate() {
                let _ = write!(out, "{p:<pw$}");
                for (ai, (mean, sd)) in self.tables[&m][pi].iter().enumerate() {
                    let mark = if ai == 0 {
                        ' '
                    } else {
                        self.comparisons
                            .iter()
                            .find(|c| c.metric == m && c.problem == *p && c.competitor == self.algorithms[ai])
                            .map_or(' ', |c| c.verdict.symbol())
                    };
                    let cell = format!("{mean:.4e}({sd:.2e}){mark}");
                    let _ = write!(out, "  {cell:>26}");
                }
                out.push('\n');
            }
            for (label, pick) in [("W/T/L", false), ("W/T/L (Holm)", true)] {
                let _ = write!(out, "{label:<pw$}");
                let _ = write!(out, "  {:>26}", "");
                for a in &self.algorithms[1..] {
                    let s = self.summary(a, m).expect("summary per competitor");
                    let t = if pick { s.holm } else { s.raw };
                    let _ = write!(out, "  {:>26}", t.to_string());
                }
                out.push('\n');
            }
            let _ = write!(out, "{:<pw$}  {:>26}", "median A12", "");
            for a in &self.algorithms[1..] {
                let s = self.summary(a, m).expect("summary per competitor");
                let _ = write!(out, "  {:>26}", format!("{:.3}", s.median_a12));
            }
            out.push('\n');
            match &self.friedman[&m] {
                Some(f) => {
                    let ranks: Vec<String> = self
                        .algorithms
                        .iter()
                        .zip(&f.avg_ranks)
                        .map(|(a, r)| format!("{a}={r:.2}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        "Friedman: chi2={:.2}, df={}, p={:.2e}; avg ranks {}",
                        f.chi2,
                        f.df,
                        f.p_value,
                        ranks.join(", ")
                    );
                }
                None => {
                    let _ = writeln!(out, "Friedman: not computed (needs at least two problems)");
                }
            }
        }
        out
    }

    pub fn summary(&self, competitor: &str, metric: Metric) -> Option<&CompetitorSummary> {
        self.summaries.iter().find(|s| s.competitor == competitor && s.metric == metric)
    }
}
