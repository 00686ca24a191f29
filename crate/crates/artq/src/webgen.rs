//! Coverage campaigns over navigation models: every technique on every
//! model for a number of repetitions, with coverage, AUC, unique-target and
//! test-length metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use artq_core::metrics::{auc, hard_targets, unique_targets, CoverageTrajectory};
use artq_core::nav::{ModelExecutor, NavGenerator, NavigationModel, DEFAULT_MAX_WALK_LEN};
use artq_core::{run, Diversity, QGramConfig, RunOptions, RunRecord, StoppingCriterion, Strategy, TargetId, TokenMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::simulation::MonotonicClock;

pub const DEFAULT_W: usize = 30;
pub const DEFAULT_Q: usize = 2;
pub const DEFAULT_REPS: usize = 5;
pub const DEFAULT_MAX_EXECUTIONS: u64 = 2_000;
pub const LENGTH_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "rand")]
    Rand,
    #[serde(rename = "dist")]
    Dist,
    #[serde(rename = "qgrams_s")]
    QGramsS,
    #[serde(rename = "qgrams_si")]
    QGramsSI,
}

impl Technique {
    pub const ALL: [Technique; 4] = [Technique::Rand, Technique::Dist, Technique::QGramsS, Technique::QGramsSI];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Rand => "rand",
            Technique::Dist => "dist",
            Technique::QGramsS => "qgrams_s",
            Technique::QGramsSI => "qgrams_si",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown technique `{s}` (expected rand, dist, qgrams_s or qgrams_si)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Executions(u64),
    Wall(Duration),
}

impl Budget {
    fn stop(self) -> StoppingCriterion {
        match self {
            Budget::Executions(n) => StoppingCriterion::MaxExecutions(n),
            Budget::Wall(d) => StoppingCriterion::WallBudget(d),
        }
    }
}

/// A technique with its candidate-set size and q-gram length. Random
/// testing ignores both; distance ART ignores `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechniqueConfig {
    pub technique: Technique,
    pub w: usize,
    pub q: usize,
}

impl TechniqueConfig {
    pub fn new(technique: Technique) -> Self {
        TechniqueConfig {
            technique,
            w: DEFAULT_W,
            q: DEFAULT_Q,
        }
    }

    pub fn strategy(&self) -> Strategy {
        let qgram = |mode| Strategy::QGram {
            w: self.w,
            config: QGramConfig::new(self.q, mode),
            diversity: Diversity::Entropy,
        };
        match self.technique {
            Technique::Rand => Strategy::Random,
            Technique::Dist => Strategy::Dist {
                w: self.w,
                mode: TokenMode::SequenceOnly,
            },
            Technique::QGramsS => qgram(TokenMode::SequenceOnly),
            Technique::QGramsSI => qgram(TokenMode::SequencePlusInputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub techniques: Vec<Technique>,
    pub w: usize,
    pub q: usize,
    pub reps: usize,
    pub budget: Budget,
    pub seed: u64,
    pub max_walk_len: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            techniques: Technique::ALL.to_vec(),
            w: DEFAULT_W,
            q: DEFAULT_Q,
            reps: DEFAULT_REPS,
            budget: Budget::Executions(DEFAULT_MAX_EXECUTIONS),
            seed: 0,
            max_walk_len: DEFAULT_MAX_WALK_LEN,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one campaign cell, mixed so that neighbouring cells and
/// neighbouring campaign seeds are unrelated.
pub fn cell_seed(seed: u64, model: usize, technique: Technique, rep: usize) -> u64 {
    let t = Technique::ALL.iter().position(|x| *x == technique).unwrap_or(0) as u64;
    let cell = ((model as u64) << 40) | (t << 32) | rep as u64;
    splitmix64(splitmix64(seed) ^ cell)
}

/// One technique run on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub technique: Technique,
    pub rep: usize,
    pub seed: u64,
    pub trajectory: CoverageTrajectory,
    pub lengths: Vec<usize>,
    pub covered: BTreeSet<TargetId>,
    pub executions: u64,
    pub distance_calls: u64,
    pub diversity_evals: u64,
    pub selection_time: Duration,
    pub execution_time: Duration,
}

/// Runs one technique on one model.
pub fn run_cell(
    model: &Arc<NavigationModel>,
    technique: TechniqueConfig,
    budget: Budget,
    max_walk_len: usize,
    rep: usize,
    seed: u64,
) -> Result<(CellResult, RunRecord), CliError> {
    let mut gen = NavGenerator::new(Arc::clone(model), max_walk_len);
    let mut exec = ModelExecutor::new(Arc::clone(model));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clock = MonotonicClock::start();
    let options = RunOptions {
        retain_tests: false,
        log_iterations: true,
        log_candidates: false,
    };
    let stop = [budget.stop(), StoppingCriterion::AllTargetsCovered];
    let mut record = run(&technique.strategy(), &mut gen, &mut exec, &stop, &mut rng, &clock, options)?;
    record.seed = Some(seed);
    let cell = CellResult {
        model: model.name.clone(),
        technique: technique.technique,
        rep,
        seed,
        trajectory: CoverageTrajectory::from_run(&record, model.target_count()),
        lengths: record.lengths(),
        covered: record.covered.clone(),
        executions: record.counters.executions,
        distance_calls: record.counters.distance_calls,
        diversity_evals: record.counters.diversity_evals,
        selection_time: record.counters.wall_selection_time,
        execution_time: record.counters.wall_execution_time,
    };
    Ok((cell, record))
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub technique: Technique,
    pub rep: usize,
    pub seed: u64,
    pub total_targets: usize,
    pub covered: usize,
    pub coverage_pct: f64,
    pub auc: f64,
    pub auc_at_20: f64,
    pub unique_targets: usize,
    pub exec_tests: u64,
    pub mean_length: f64,
    /// Seconds per executed test.
    pub mean_exec_time: f64,
    /// Seconds of candidate selection per executed test.
    pub mean_gen_time: f64,
    pub distance_calls: u64,
    pub diversity_evals: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Campaign {
    pub rows: Vec<SummaryRow>,
    pub cells: Vec<CellResult>,
    /// Targets no random-testing repetition covered, per model.
    pub hard_targets: BTreeMap<String, BTreeSet<TargetId>>,
    /// Models that failed to load, with the error message.
    pub model_errors: Vec<(String, String)>,
}

impl Campaign {
    pub fn rows_for<'a>(&'a self, model: &'a str, technique: Technique) -> impl Iterator<Item = &'a SummaryRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.model == model && r.technique == technique)
    }

    /// Mean of `metric` over the repetitions of one model and technique.
    pub fn mean_of(&self, model: &str, technique: Technique, metric: impl Fn(&SummaryRow) -> f64) -> Option<f64> {
        let v: Vec<f64> = self.rows_for(model, technique).map(metric).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Runs every technique on every model for `config.reps` repetitions.
/// Models that failed to load are recorded and skipped.
pub fn run_campaign(
    models: Vec<(String, Result<NavigationModel, CliError>)>,
    config: &CampaignConfig,
) -> Result<Campaign, CliError> {
    if config.reps == 0 {
        return Err(CliError::Config("repetitions must be >= 1".into()));
    }
    if config.techniques.is_empty() {
        return Err(CliError::Config("no techniques selected".into()));
    }
    let mut campaign = Campaign::default();
    let mut loaded = Vec::new();
    for (name, m) in models {
        match m {
            Ok(mut model) => {
                if model.name.is_empty() {
                    model.name = name;
                }
                loaded.push(Arc::new(model));
            }
            Err(e) => campaign.model_errors.push((name, e.to_string())),
        }
    }

    let jobs: Vec<(usize, Technique, usize)> = (0..loaded.len())
        .flat_map(|m| {
            config
                .techniques
                .iter()
                .flat_map(move |&t| (0..config.reps).map(move |r| (m, t, r)))
        })
        .collect();
    let results: Vec<(usize, CellResult, RunRecord)> = jobs
        .into_par_iter()
        .map(|(m, t, rep)| {
            let tc = TechniqueConfig {
                technique: t,
                w: config.w,
                q: config.q,
            };
            let seed = cell_seed(config.seed, m, t, rep);
            run_cell(&loaded[m], tc, config.budget, config.max_walk_len, rep, seed).map(|(c, r)| (m, c, r))
        })
        .collect::<Result<_, _>>()?;

    for (m, model) in loaded.iter().enumerate() {
        let cells: Vec<&(usize, CellResult, RunRecord)> = results.iter().filter(|x| x.0 == m).collect();
        let horizon = cells.iter().map(|c| c.1.executions).max().unwrap_or(1).max(1);
        let rand_runs: Vec<RunRecord> = cells
            .iter()
            .filter(|c| c.1.technique == Technique::Rand)
            .map(|c| c.2.clone())
            .collect();
        if !rand_runs.is_empty() {
            campaign
                .hard_targets
                .insert(model.name.clone(), hard_targets(model, &rand_runs)?);
        }
        let mut uniques: BTreeMap<usize, BTreeMap<Technique, usize>> = BTreeMap::new();
        for rep in 0..config.reps {
            let sets: BTreeMap<Technique, BTreeSet<TargetId>> = cells
                .iter()
                .filter(|c| c.1.rep == rep)
                .map(|c| (c.1.technique, c.1.covered.clone()))
                .collect();
            uniques.insert(rep, unique_targets(&sets));
        }
        for (_, cell, _) in &cells {
            let n = cell.executions.max(1) as f64;
            let row = SummaryRow {
                model: model.name.clone(),
                technique: cell.technique,
                rep: cell.rep,
                seed: cell.seed,
                total_targets: model.target_count(),
                covered: cell.covered.len(),
                coverage_pct: cell.trajectory.final_pct(),
                auc: auc(&cell.trajectory, 1.0, horizon)?,
                auc_at_20: auc(&cell.trajectory, 0.2, horizon)?,
                unique_targets: uniques[&cell.rep][&cell.technique],
                exec_tests: cell.executions,
                mean_length: cell.lengths.iter().sum::<usize>() as f64 / n,
                mean_exec_time: cell.execution_time.as_secs_f64() / n,
                mean_gen_time: cell.selection_time.as_secs_f64() / n,
                distance_calls: cell.distance_calls,
                diversity_evals: cell.diversity_evals,
            };
            campaign.rows.push(row);
        }
    }
    campaign.rows.sort_by(|a, b| {
        (&a.model, a.technique, a.rep).cmp(&(&b.model, b.technique, b.rep))
    });
    campaign.cells = results.into_iter().map(|(_, c, _)| c).collect();
    campaign
        .cells
        .sort_by(|a, b| (&a.model, a.technique, a.rep).cmp(&(&b.model, b.technique, b.rep)));
    Ok(campaign)
}

#[derive(Serialize)]
struct TrajectoryRow {
    executions: u64,
    covered: usize,
    length: usize,
    smoothed_length: f64,
}

#[derive(Serialize)]
struct UniqueRow<'a> {
    model: &'a str,
    rep: usize,
    technique: Technique,
    unique_targets: usize,
}

/// Writes `summary.csv`, `uniques.csv`, `hard_targets.csv` and one
/// `trajectories/<model>_<technique>_<rep>.csv` per cell.
pub fn write_campaign(campaign: &Campaign, out_dir: &Path) -> Result<(), CliError> {
    let traj_dir = out_dir.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(|e| CliError::io(&traj_dir, e))?;

    let write_rows = |name: &str, rows: &mut dyn FnMut(&mut csv::Writer<fs::File>) -> Result<(), csv::Error>| {
        let path = out_dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::csv(path.display().to_string(), e))?;
        rows(&mut w).map_err(|e| CliError::csv(path.display().to_string(), e))?;
        w.flush().map_err(|e| CliError::io(&path, e))
    };

    write_rows("summary.csv", &mut |w| campaign.rows.iter().try_for_each(|r| w.serialize(r)))?;
    write_rows("uniques.csv", &mut |w| {
        campaign.rows.iter().try_for_each(|r| {
            w.serialize(UniqueRow {
                model: &r.model,
                rep: r.rep,
                technique: r.technique,
                unique_targets: r.unique_targets,
            })
        })
    })?;
    write_rows("hard_targets.csv", &mut |w| {
        w.write_record(["model", "target"])?;
        for (model, targets) in &campaign.hard_targets {
            for t in targets {
                w.write_record([model.as_str(), &t.0.to_string()])?;
            }
        }
        Ok(())
    })?;

    for cell in &campaign.cells {
        let name = format!("trajectories/{}_{}_{}.csv", cell.model, cell.technique, cell.rep);
        let smoothed = artq_core::metrics::smooth_lengths(&cell.lengths, LENGTH_WINDOW)?;
        write_rows(&name, &mut |w| {
            for ((&(executions, covered), &length), &(_, s)) in
                cell.trajectory.points.iter().zip(&cell.lengths).zip(&smoothed)
            {
                w.serialize(TrajectoryRow {
                    executions,
                    covered,
                    length,
                    smoothed_length: s,
                })?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Reads `summary.csv` rows back.
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let origin = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(&origin, e))?;
    r.deserialize().map(|row| row.map_err(|e| CliError::csv(&origin, e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn technique_names_round_trip() {
        for t in Technique::ALL {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert!("qgram".parse::<Technique>().is_err());
    }

    #[test]
    fn strategies_ignore_unused_parameters() {
        let mut tc = TechniqueConfig::new(Technique::Rand);
        tc.w = 99;
        assert_eq!(tc.strategy(), Strategy::Random);
        tc.technique = Technique::Dist;
        tc.q = 7;
        assert_eq!(
            tc.strategy(),
            Strategy::Dist {
                w: 99,
                mode: TokenMode::SequenceOnly
            }
        );
    }

    #[test]
    fn cell_seeds_differ() {
        let mut seen = BTreeSet::new();
        for seed in 0..4 {
            for m in 0..3 {
                for t in Technique::ALL {
                    for r in 0..5 {
                        assert!(seen.insert(cell_seed(seed, m, t, r)));
                    }
                }
            }
        }
    }
}
