//! Fast self-check battery behind `rdex verify`.

use crate::metrics::{auc, time_to_target};
use crate::stats::{self, friedman_from_average_ranks, midranks, wilcoxon_rank_sum};
use crate::suite::{self, DimSupport};
use crate::trace::{CheckpointRecord, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// A failure that is documented as not reproducible; it is reported but
    /// does not fail the battery.
    pub known_gap: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, known_gap: false, detail: detail.into() }
    }

    pub fn status(&self) -> &'static str {
        match (self.passed, self.known_gap) {
            (true, _) => "PASS",
            (false, true) => "GAP",
            (false, false) => "FAIL",
        }
    }

    pub fn blocks(&self) -> bool {
        !self.passed && !self.known_gap
    }
}

/// Reference Friedman summaries `(label, average ranks, chi2, p)` with N = 28.
pub const REFERENCE_FRIEDMAN: [(&str, [f64; 4], f64, f64); 3] = [
    ("Final Q", [2.29, 2.39, 2.84, 2.48], 2.90, 0.408),
    ("TTT", [1.61, 2.14, 2.89, 3.36], 30.47, 2.62e-6),
    ("Final Obj.", [2.11, 2.46, 2.66, 2.77], 4.25, 0.234),
];

/// The reference TTT p-value is about 2.4 times the chi-square(3) upper
/// tail at the reference statistic (1.10e-6), so it cannot be matched from
/// the ranks and statistic alone.
pub const KNOWN_P_GAPS: [&str; 1] = ["TTT"];
pub const REFERENCE_BLOCKS: usize = 28;
pub const CHI2_TOLERANCE: f64 = 0.02;
pub const P_RELATIVE_TOLERANCE: f64 = 0.10;

/// Two-sided rank-sum p-value by enumerating every split of the pooled
/// midranks into groups of sizes `n` and `m`.
pub fn enumerated_rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (n, total) = (a.len(), pooled.len());
    let centre = n as f64 * (total + 1) as f64 / 2.0;
    let observed: f64 = ranks[..n].iter().sum();
    let dev = (observed - centre).abs() - 1e-9;
    let (mut extreme, mut count) = (0u64, 0u64);
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let s: f64 = idx.iter().map(|&i| ranks[i]).sum();
        count += 1;
        if (s - centre).abs() >= dev {
            extreme += 1;
        }
        // next n-combination of 0..total in lexicographic order
        let mut i = n;
        while i > 0 && idx[i - 1] == total - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    extreme as f64 / count as f64
}

fn optimum_checks(out: &mut Vec<CheckResult>) {
    for info in suite::problem_info() {
        let dims: Vec<usize> = match info.dims {
            DimSupport::Exactly(d) => vec![d],
            DimSupport::AtLeast(d) => vec![d.max(2), 4, 10],
            DimSupport::Any => vec![1, 4, 10],
        };
        for d in dims {
            let name = format!("optimum {} D={d}", info.name);
            match suite::get_problem(info.name, d).and_then(|e| suite::verify_optimum(&e)) {
                Ok(ok) => out.push(CheckResult::new(name, ok, if ok { "feasible at stated value" } else { "mismatch" })),
                Err(e) => out.push(CheckResult::new(name, false, e.to_string())),
            }
        }
    }
}

fn friedman_checks(out: &mut Vec<CheckResult>) {
    for (label, ranks, chi2, p) in REFERENCE_FRIEDMAN {
        match friedman_from_average_ranks(&ranks, REFERENCE_BLOCKS) {
            Ok((c, df, pv)) => {
                out.push(CheckResult::new(
                    format!("friedman {label} chi2"),
                    (c - chi2).abs() <= CHI2_TOLERANCE && df == 3,
                    format!("chi2={c:.3} (reference {chi2}), df={df}"),
                ));
                let mut r = CheckResult::new(
                    format!("friedman {label} p"),
                    ((pv - p) / p).abs() <= P_RELATIVE_TOLERANCE,
                    format!("p={pv:.3e} (reference {p:.3e})"),
                );
                r.known_gap = KNOWN_P_GAPS.contains(&label);
                out.push(r);
            }
            Err(e) => out.push(CheckResult::new(format!("friedman {label}"), false, e.to_string())),
        }
    }
}

fn wilcoxon_checks(out: &mut Vec<CheckResult>) {
    let cases: [(&str, &[f64], &[f64]); 5] = [
        ("2x2 separated", &[1.0, 2.0], &[3.0, 4.0]),
        ("3x4 tie-free", &[0.3, 1.7, 2.2], &[1.1, 2.9, 3.5, 4.0]),
        ("4x4 tied", &[1.0, 2.0, 2.0, 3.0], &[2.0, 3.0, 3.0, 5.0]),
        ("5x6 heavy ties", &[0.0, 0.0, 1.0, 1.0, 1.0], &[1.0, 1.0, 2.0, 2.0, 0.0, 2.0]),
        ("8x8 interleaved", &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 30.0], &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 15.0]),
    ];
    for (label, a, b) in cases {
        let exact = enumerated_rank_sum_p(a, b);
        let name = format!("wilcoxon {label}");
        match wilcoxon_rank_sum(a, b, 0.05) {
            Ok(t) => out.push(CheckResult::new(
                name,
                (t.p_value - exact).abs() <= 0.02,
                format!("p={:.4} enumeration={exact:.4}", t.p_value),
            )),
            Err(e) => out.push(CheckResult::new(name, false, e.to_string())),
        }
    }
    let a12 = stats::vargha_delaney_a12(&[1.0, 2.0], &[3.0, 4.0]).unwrap_or(f64::NAN);
    out.push(CheckResult::new("a12 dominance", a12 == 1.0, format!("A12={a12}")));
}

fn metric_checks(out: &mut Vec<CheckResult>) {
    let points: Vec<CheckpointRecord> = (1..=2000)
        .map(|k| CheckpointRecord { checkpoint: k, nfe: 10 * k as u64, best_f: 5.0, best_cv: 0.0 })
        .collect();
    let trace = RunTrace {
        problem: "selfcheck".into(),
        run_id: 0,
        seed: 0,
        dim: 1,
        max_fe: 20_000,
        points,
        final_f: 5.0,
        final_cv: 0.0,
    };
    let ttt = time_to_target(&trace, 1.0, 6.0);
    out.push(CheckResult::new("ttt never reached", ttt == 2001, format!("TTT={ttt}")));
    let a = auc(&trace, 5.0);
    out.push(CheckResult::new("auc pinned at target", a == 0.0, format!("AUC={a}")));
}

pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    optimum_checks(&mut out);
    friedman_checks(&mut out);
    wilcoxon_checks(&mut out);
    metric_checks(&mut out);
    out
}
