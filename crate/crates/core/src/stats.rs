//! Rank-sum test, Vargha-Delaney effect size and relative standard error.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Largest smaller-sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Two-sided p-value.
    pub p_value: f64,
    /// Mann-Whitney U of the first sample.
    pub statistic: f64,
    pub method: PMethod,
}

/// Average ranks (1-based) of the pooled samples, plus the tie-correction
/// term `Σ (t³ - t)`.
fn pooled_ranks(x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let mut pooled: Vec<(f64, usize)> = x
        .iter()
        .chain(y)
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &(_, idx) in &pooled[i..j] {
            ranks[idx] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Null distribution of U for sample sizes `m` and `n` without ties, as
/// probabilities indexed by U.
fn exact_u_distribution(m: usize, n: usize) -> Vec<f64> {
    // Number of m-subsets of {0..m+n-1} by (sum of chosen items) minus the
    // minimal sum; that offset sum equals U.
    let max_u = m * n;
    // ways[k][u]: subsets of size k drawn so far with statistic u
    let mut ways = vec![vec![0.0f64; max_u + 1]; m + 1];
    ways[0][0] = 1.0;
    for item in 0..(m + n) {
        for k in (1..=m.min(item + 1)).rev() {
            // choosing `item` as the k-th smallest adds item - (k - 1)
            let shift = item + 1 - k;
            if shift > n {
                continue;
            }
            let (lo, hi) = ways.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for u in (shift..=max_u).rev() {
                cur[u] += prev[u - shift];
            }
        }
    }
    let total: f64 = ways[m].iter().sum();
    ways[m].iter().map(|w| w / total).collect()
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test.
///
/// Uses the exact null distribution when the smaller sample has at most
/// [`EXACT_LIMIT`] values and there are no ties; otherwise the normal
/// approximation with tie correction and continuity correction.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult, Error> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let (_, ties) = pooled_ranks(x, y);
    let method = if x.len().min(y.len()) <= EXACT_LIMIT && ties == 0.0 {
        PMethod::Exact
    } else {
        PMethod::Normal
    };
    wilcoxon_rank_sum_with(x, y, method)
}

/// [`wilcoxon_rank_sum`] with a forced p-value method. The exact method
/// rejects tied samples.
pub fn wilcoxon_rank_sum_with(x: &[f64], y: &[f64], method: PMethod) -> Result<TestResult, Error> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let (m, n) = (x.len(), y.len());
    let (ranks, ties) = pooled_ranks(x, y);
    let rank_sum_x: f64 = ranks[..m].iter().sum();
    let u = rank_sum_x - (m * (m + 1)) as f64 / 2.0;

    if method == PMethod::Exact {
        if ties != 0.0 {
            return Err(Error::InvalidConfig("exact p-values need tie-free samples".into()));
        }
        let dist = exact_u_distribution(m, n);
        let u_idx = libm::round(u) as usize;
        let lower: f64 = dist[..=u_idx].iter().sum();
        let upper: f64 = dist[u_idx..].iter().sum();
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(TestResult {
            p_value: p,
            statistic: u,
            method,
        });
    }

    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let mean = mf * nf / 2.0;
    let tie_term = if big_n > 1.0 {
        ties / (big_n * (big_n - 1.0))
    } else {
        0.0
    };
    let var = mf * nf / 12.0 * ((big_n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / libm::sqrt(var);
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        p_value: p,
        statistic: u,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Thresholds on `|A12 - 0.5|` (A12 of 0.56, 0.64 and 0.71).
    pub const SMALL: f64 = 0.06;
    pub const MEDIUM: f64 = 0.14;
    pub const LARGE: f64 = 0.21;

    pub fn of(a12: f64) -> Self {
        let d = (a12 - 0.5).abs();
        if d < Self::SMALL {
            Magnitude::Negligible
        } else if d < Self::MEDIUM {
            Magnitude::Small
        } else if d < Self::LARGE {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub a12: f64,
    pub magnitude: Magnitude,
}

/// Vargha-Delaney Â12: probability that a draw from `x` exceeds one from
/// `y`, counting ties as one half.
pub fn vargha_delaney(x: &[f64], y: &[f64]) -> Result<EffectSize, Error> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    // twice the win count, so ties stay integral
    let mut wins2: u64 = 0;
    for a in x {
        for b in y {
            wins2 += match a.partial_cmp(b) {
                Some(Ordering::Greater) => 2,
                Some(Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    let pairs2 = 2 * (x.len() as u64) * (y.len() as u64);
    // Evaluate the smaller half directly so that A12(x, y) + A12(y, x)
    // sums to exactly one.
    let a12 = if 2 * wins2 <= pairs2 {
        wins2 as f64 / pairs2 as f64
    } else {
        1.0 - (pairs2 - wins2) as f64 / pairs2 as f64
    };
    Ok(EffectSize {
        a12,
        magnitude: Magnitude::of(a12),
    })
}

pub fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(sample: &[f64]) -> f64 {
    let n = sample.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(sample);
    let ss: f64 = sample.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (n - 1) as f64)
}

/// Standard error of the mean divided by the absolute mean.
pub fn relative_standard_error(sample: &[f64]) -> Result<f64, Error> {
    if sample.len() < 2 {
        return Err(Error::InvalidConfig("rse needs at least two values".into()));
    }
    let m = mean(sample);
    if m == 0.0 {
        return Err(Error::Domain {
            name: "mean",
            value: 0.0,
            domain: "non-zero values",
        });
    }
    let se = std_dev(sample) / libm::sqrt(sample.len() as f64);
    Ok(se / m.abs())
}
