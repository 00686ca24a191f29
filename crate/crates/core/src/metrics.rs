//! Coverage metrics over runs: AUC, unique targets, smoothed test length and
//! hard targets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::nav::NavigationModel;
use crate::selector::{RunRecord, TargetId};

/// Covered-target count after each execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTrajectory {
    /// `(executions, covered)`, sorted by executions.
    pub points: Vec<(u64, usize)>,
    pub total_targets: usize,
}

impl CoverageTrajectory {
    pub fn from_run(run: &RunRecord, total_targets: usize) -> Self {
        let points = run
            .coverage_curve()
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as u64 + 1, c))
            .collect();
        CoverageTrajectory {
            points,
            total_targets,
        }
    }

    pub fn executions(&self) -> u64 {
        self.points.last().map_or(0, |p| p.0)
    }

    pub fn final_covered(&self) -> usize {
        self.points.last().map_or(0, |p| p.1)
    }

    pub fn final_pct(&self) -> f64 {
        pct(self.final_covered(), self.total_targets)
    }

    /// Coverage percentage at executions `1..=horizon`; points hold their
    /// value until the next one and the last value pads the tail.
    pub fn dense_pct(&self, horizon: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(horizon as usize);
        let mut it = self.points.iter().peekable();
        let mut current = 0;
        for k in 1..=horizon {
            while let Some(&&(x, c)) = it.peek() {
                if x > k {
                    break;
                }
                current = c;
                it.next();
            }
            out.push(pct(current, self.total_targets));
        }
        out
    }
}

fn pct(covered: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * covered as f64 / total as f64
    }
}

/// Normalized area under the coverage-vs-executions curve.
///
/// The curve is padded with its last value up to `horizon` executions (the
/// longest run being compared) and integrated with the trapezoid rule over
/// the first `ceil(fraction * horizon)` executions. The area is divided by
/// the full rectangle, `(horizon - 1) * 100`, so `fraction = 1` gives the AUC
/// and smaller fractions give values no larger than it.
pub fn auc(trajectory: &CoverageTrajectory, fraction: f64, horizon: u64) -> Result<f64, Error> {
    if trajectory.points.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain {
            name: "fraction",
            value: fraction,
            domain: "(0, 1]",
        });
    }
    let horizon = horizon.max(trajectory.executions());
    let values = trajectory.dense_pct(horizon);
    if horizon == 1 {
        return Ok(values[0] / 100.0);
    }
    let k = (libm::ceil(fraction * horizon as f64) as usize).clamp(1, horizon as usize);
    let area = values[..k]
        .windows(2)
        .fold(0.0, |acc, w| acc + (w[0] + w[1]) / 2.0);
    Ok(area / ((horizon - 1) as f64 * 100.0))
}

/// For each technique, the number of its targets no other technique covered.
pub fn unique_targets<K: Ord + Clone>(covered: &BTreeMap<K, BTreeSet<TargetId>>) -> BTreeMap<K, usize> {
    covered
        .iter()
        .map(|(k, mine)| {
            let n = mine
                .iter()
                .filter(|t| !covered.iter().any(|(other, set)| other != k && set.contains(t)))
                .count();
            (k.clone(), n)
        })
        .collect()
}

/// Trailing moving average of test lengths: the point at 1-based index `i`
/// averages lengths `max(1, i - window + 1)..=i`.
pub fn smooth_lengths(lengths: &[usize], window: usize) -> Result<Vec<(usize, f64)>, Error> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(lengths.len());
    let mut sum = 0usize;
    for (i, &len) in lengths.iter().enumerate() {
        sum += len;
        if i >= window {
            sum -= lengths[i - window];
        }
        let n = (i + 1).min(window);
        out.push((i + 1, sum as f64 / n as f64));
    }
    Ok(out)
}

pub fn length_trajectory(run: &RunRecord, window: usize) -> Result<Vec<(usize, f64)>, Error> {
    smooth_lengths(&run.lengths(), window)
}

/// Targets that no random-testing run covered.
pub fn hard_targets(model: &NavigationModel, rand_runs: &[RunRecord]) -> Result<BTreeSet<TargetId>, Error> {
    if rand_runs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(model
        .targets()
        .filter(|t| !rand_runs.iter().any(|r| r.covered.contains(t)))
        .collect())
}
