//! Pairwise technique comparisons over campaign summaries.

use std::collections::BTreeMap;

use artq_core::stats::{mean, vargha_delaney, wilcoxon_rank_sum, Magnitude, PMethod};
use serde::Serialize;

use crate::error::CliError;
use crate::webgen::{SummaryRow, Technique};

pub type Metric = (&'static str, fn(&SummaryRow) -> f64);

/// Metrics compared by [`compare`].
pub const METRICS: &[Metric] = &[
    ("coverage_pct", |r| r.coverage_pct),
    ("auc", |r| r.auc),
    ("auc_at_20", |r| r.auc_at_20),
    ("unique_targets", |r| r.unique_targets as f64),
    ("mean_length", |r| r.mean_length),
    ("exec_tests", |r| r.exec_tests as f64),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub model: String,
    pub metric: String,
    pub technique_a: Technique,
    pub technique_b: Technique,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub p_value: f64,
    pub p_method: PMethod,
    /// Probability that a repetition of `technique_a` scores higher.
    pub a12: f64,
    pub magnitude: Magnitude,
}

/// Every metric for every ordered technique pair `(a, b)` with `a < b`,
/// per model.
pub fn compare(rows: &[SummaryRow]) -> Result<Vec<Comparison>, CliError> {
    let mut groups: BTreeMap<(&str, Technique), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.model.as_str(), r.technique)).or_default().push(r);
    }
    let mut out = Vec::new();
    for (&(model, a), rows_a) in &groups {
        for (&(model_b, b), rows_b) in &groups {
            if model_b != model || b <= a {
                continue;
            }
            for (metric, f) in METRICS {
                let x: Vec<f64> = rows_a.iter().map(|r| f(r)).collect();
                let y: Vec<f64> = rows_b.iter().map(|r| f(r)).collect();
                let test = wilcoxon_rank_sum(&x, &y)?;
                let effect = vargha_delaney(&x, &y)?;
                out.push(Comparison {
                    model: model.to_string(),
                    metric: metric.to_string(),
                    technique_a: a,
                    technique_b: b,
                    n_a: x.len(),
                    n_b: y.len(),
                    mean_a: mean(&x),
                    mean_b: mean(&y),
                    p_value: test.p_value,
                    p_method: test.method,
                    a12: effect.a12,
                    magnitude: effect.magnitude,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_comparisons<W: std::io::Write>(out: W, rows: &[Comparison]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
