//! Nonparametric comparison statistics: Wilcoxon rank-sum, Holm step-down
//! correction, the Friedman test and the Vargha–Delaney A12 effect size.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Samples with at most this many pooled observations get the exact
/// permutation distribution; larger ones use the normal approximation.
pub const EXACT_RANK_SUM_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Win,
    Tie,
    Loss,
}

impl Verdict {
    /// `+`, `=`, `-` from the first sample's point of view.
    pub fn symbol(self) -> char {
        match self {
            Verdict::Win => '+',
            Verdict::Tie => '=',
            Verdict::Loss => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub a12: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for one value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Median; the mean of the two central values for even counts.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Midranks (1-based) of `xs`, ties sharing the average rank.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

fn tie_group_sizes(xs: &[f64]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut start = 0;
    while start < v.len() {
        let mut end = start + 1;
        while end < v.len() && v[end] == v[start] {
            end += 1;
        }
        sizes.push(end - start);
        start = end;
    }
    sizes
}

/// Two-sided exact p-value of the rank sum of `n` of the pooled items,
/// computed on doubled midranks so ties stay integral.
fn exact_rank_sum_p(doubled_ranks: &[i64], n: usize, observed: i64) -> f64 {
    let total_sum: i64 = doubled_ranks.iter().sum();
    let max_sum = total_sum as usize;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n + 1];
    ways[0][0] = 1.0;
    for &r in doubled_ranks {
        let r = r as usize;
        for k in (1..=n).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let (prev, cur) = (&lo[k - 1], &mut hi[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let pooled = doubled_ranks.len() as i64;
    let centre = n as i64 * (pooled + 1); // doubled expectation
    let dist = (observed - centre).abs();
    let (mut hit, mut all) = (0.0, 0.0);
    for (s, &w) in ways[n].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        all += w;
        if (s as i64 - centre).abs() >= dist {
            hit += w;
        }
    }
    (hit / all).min(1.0)
}

fn normal_rank_sum_p(n: usize, m: usize, rank_sum: f64, ties: &[usize]) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let pooled = nf + mf;
    let u = rank_sum - nf * (nf + 1.0) / 2.0;
    let mu = nf * mf / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (pooled * (pooled - 1.0));
    let var = nf * mf / 12.0 * ((pooled + 1.0) - tie_term);
    if !(var > 0.0) {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided Wilcoxon rank-sum test of `a` against `b` with midranks for
/// ties. Pooled sizes up to [`EXACT_RANK_SUM_LIMIT`] use the exact
/// permutation distribution; larger samples use the normal approximation
/// with tie-corrected variance and continuity correction.
///
/// The verdict is from `a`'s point of view under minimisation: a win when
/// `p < alpha` and `a` sits lower (by median, then by mean rank).
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("rank-sum test got NaN".into()));
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let a12 = vargha_delaney_a12(a, b)?;

    if pooled.iter().all(|&v| v == pooled[0]) {
        return Ok(TestOutcome { statistic: rank_sum, p_value: 1.0, verdict: Verdict::Tie, a12 });
    }

    let p_value = if n + m <= EXACT_RANK_SUM_LIMIT {
        let doubled: Vec<i64> = ranks.iter().map(|r| (2.0 * r).round() as i64).collect();
        let observed: i64 = doubled[..n].iter().sum();
        exact_rank_sum_p(&doubled, n, observed)
    } else {
        normal_rank_sum_p(n, m, rank_sum, &tie_group_sizes(&pooled))
    };

    let verdict = if p_value < alpha {
        let (ma, mb) = (median(a).expect("non-empty"), median(b).expect("non-empty"));
        let lower = if ma != mb { ma < mb } else { rank_sum < n as f64 * (n + m + 1) as f64 / 2.0 };
        if lower {
            Verdict::Win
        } else {
            Verdict::Loss
        }
    } else {
        Verdict::Tie
    };
    Ok(TestOutcome { statistic: rank_sum, p_value, verdict, a12 })
}

/// Holm step-down: walk the p-values in ascending order and reject while
/// `p_(i) <= alpha / (m - i + 1)`. Flags come back in input order.
pub fn holm_correct(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| p_values[x].total_cmp(&p_values[y]));
    let mut reject = vec![false; m];
    for (i, &k) in order.iter().enumerate() {
        if p_values[k] <= alpha / (m - i) as f64 {
            reject[k] = true;
        } else {
            break;
        }
    }
    reject
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub avg_ranks: Vec<f64>,
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("df >= 1").sf(x)
}

/// Classical Friedman statistic from average ranks:
/// `12N / (k(k+1)) * (Σ R̄² - k(k+1)²/4)`.
pub fn friedman_from_average_ranks(avg_ranks: &[f64], n_blocks: usize) -> Result<(f64, usize, f64)> {
    let k = avg_ranks.len();
    if k < 2 || n_blocks == 0 {
        return Err(Error::InvalidInput(format!(
            "Friedman test needs k >= 2 and N >= 1, got k = {k}, N = {n_blocks}"
        )));
    }
    let (kf, nf) = (k as f64, n_blocks as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    Ok((chi2, k - 1, chi2_sf(chi2, k - 1)))
}

/// Friedman test on a `problems × algorithms` matrix, ranking algorithms
/// ascending within each problem (midranks for ties).
pub fn friedman(values: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = values.len();
    let k = values.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InvalidInput(format!(
            "Friedman test needs >= 2 problems and >= 2 algorithms, got {n} x {k}"
        )));
    }
    if values.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidInput("ragged Friedman matrix".into()));
    }
    let mut avg_ranks = vec![0.0; k];
    for row in values {
        for (j, r) in midranks(row).into_iter().enumerate() {
            avg_ranks[j] += r;
        }
    }
    avg_ranks.iter_mut().for_each(|r| *r /= n as f64);
    let (chi2, df, p_value) = friedman_from_average_ranks(&avg_ranks, n)?;
    Ok(FriedmanResult { chi2, df, p_value, avg_ranks })
}

/// `[#(theirs > ours) + 0.5 #(theirs == ours)] / (|ours| |theirs|)`:
/// above 0.5 when `ours` tends to be smaller.
pub fn vargha_delaney_a12(ours: &[f64], theirs: &[f64]) -> Result<f64> {
    if ours.is_empty() || theirs.is_empty() {
        return Err(Error::InvalidInput("A12 needs two non-empty samples".into()));
    }
    let mut score = 0.0;
    for &o in ours {
        for &t in theirs {
            if t > o {
                score += 1.0;
            } else if t == o {
                score += 0.5;
            }
        }
    }
    Ok(score / (ours.len() * theirs.len()) as f64)
}
