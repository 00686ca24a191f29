//! The test selection engine: random testing, pairwise-distance ART and
//! ART with q-gram aggregation, sharing one instrumented run loop.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distance::min_distance_tokens;
use crate::error::Error;
use crate::qgram::{Diversity, QGramConfig, QGramCounts, Token, TokenMode, tokenize};
use crate::test_case::TestCase;

/// Identifier of a coverage target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetId(pub u32);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub failed: bool,
    pub covered: BTreeSet<TargetId>,
}

impl ExecutionOutcome {
    pub fn pass() -> Self {
        Self::default()
    }

    pub fn fail() -> Self {
        ExecutionOutcome {
            failed: true,
            covered: BTreeSet::new(),
        }
    }
}

/// An executor could not run a test at all (as opposed to the test failing).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("executor fault: {0}")]
pub struct ExecutorFault(pub String);

/// Produces random test cases.
pub trait CandidateGenerator {
    /// Must return exactly `count` tests and draw all randomness from `rng`.
    fn sample(&mut self, count: usize, rng: &mut dyn RngCore) -> Vec<TestCase>;

    /// Called after every execution, e.g. to track what is still uncovered.
    fn observe(&mut self, _test: &TestCase, _outcome: &ExecutionOutcome) {}
}

pub trait Executor {
    fn execute(&mut self, test: &TestCase) -> Result<ExecutionOutcome, ExecutorFault>;

    /// Size of the coverage universe, when there is one.
    fn target_count(&self) -> Option<usize> {
        None
    }
}

/// Monotonic time source. `now` is measured from an arbitrary origin.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// A clock that never advances; wall-clock fields stay zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingCriterion {
    MaxExecutions(u64),
    FirstFailure,
    WallBudget(Duration),
    /// Requires an executor that reports its target count.
    AllTargetsCovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Strategy {
    Random,
    Dist {
        w: usize,
        mode: TokenMode,
    },
    QGram {
        w: usize,
        config: QGramConfig,
        diversity: Diversity,
    },
}

impl Strategy {
    pub fn qgram(w: usize, q: usize, mode: TokenMode) -> Self {
        Strategy::QGram {
            w,
            config: QGramConfig::new(q, mode),
            diversity: Diversity::Entropy,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "rand",
            Strategy::Dist { .. } => "dist",
            Strategy::QGram { .. } => "qgram",
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match *self {
            Strategy::Random => Ok(()),
            Strategy::Dist { w: 0, .. } => Err(Error::InvalidConfig("W must be >= 1".into())),
            Strategy::QGram { w: 0, .. } => Err(Error::InvalidConfig("W must be >= 1".into())),
            Strategy::QGram { config, .. } if config.q == 0 => {
                Err(Error::InvalidConfig("Q must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InstrumentationCounters {
    pub distance_calls: u64,
    pub diversity_evals: u64,
    pub executions: u64,
    pub wall_selection_time: Duration,
    pub wall_execution_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep every executed test in the record.
    pub retain_tests: bool,
    /// Keep one log entry per execution.
    pub log_iterations: bool,
    /// Keep each iteration's full candidate set (implies `log_iterations`).
    pub log_candidates: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            retain_tests: true,
            log_iterations: true,
            log_candidates: false,
        }
    }
}

impl RunOptions {
    /// Counters and outcome only; for long simulation runs.
    pub fn minimal() -> Self {
        RunOptions {
            retain_tests: false,
            log_iterations: false,
            log_candidates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// 1-based execution index.
    pub execution: u64,
    pub candidates: usize,
    pub chosen: usize,
    /// Score of the chosen candidate; absent for random picks and the seed test.
    pub score: Option<f64>,
    pub length: usize,
    pub failed: bool,
    pub new_targets: Vec<TargetId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_set: Option<Vec<TestCase>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxExecutions,
    FirstFailure,
    WallBudget,
    AllTargetsCovered,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub stop: Vec<StoppingCriterion>,
    pub seed: Option<u64>,
    pub iterations: Vec<IterationLog>,
    pub executed: Vec<TestCase>,
    pub counters: InstrumentationCounters,
    /// Execution index of the first failing test.
    pub first_failure: Option<u64>,
    pub covered: BTreeSet<TargetId>,
    pub stop_reason: StopReason,
    pub aborted: Option<String>,
}

impl RunRecord {
    pub fn lengths(&self) -> Vec<usize> {
        self.iterations.iter().map(|it| it.length).collect()
    }

    /// Cumulative covered-target count after each execution.
    pub fn coverage_curve(&self) -> Vec<usize> {
        let mut covered = 0;
        self.iterations
            .iter()
            .map(|it| {
                covered += it.new_targets.len();
                covered
            })
            .collect()
    }
}

/// Index of the maximal score; ties go to the lowest index.
pub fn argmax_index<S: PartialOrd>(scores: &[S]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        let better = match best {
            Some(b) => s.partial_cmp(&scores[b]) == Some(core::cmp::Ordering::Greater),
            None => true,
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// The candidate with maximal score, first in sampling order on ties.
pub fn select_argmax<T, S: PartialOrd + Copy>(scored: &[(T, S)]) -> Option<&T> {
    let scores: Vec<S> = scored.iter().map(|(_, s)| *s).collect();
    argmax_index(&scores).map(|i| &scored[i].0)
}

/// Executed tests plus whatever the strategy keeps about them.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    pub executed: Vec<TestCase>,
    /// q-gram aggregate of every executed test (q-gram strategy only).
    pub aggregate: QGramCounts,
    tokens: Vec<Vec<Token>>,
    size: usize,
}

impl Archive {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}

struct Selection {
    test: TestCase,
    candidates: usize,
    chosen: usize,
    score: Option<f64>,
    counts: Option<QGramCounts>,
    tokens: Option<Vec<Token>>,
    candidate_set: Option<Vec<TestCase>>,
}

fn draw(gen: &mut dyn CandidateGenerator, n: usize, rng: &mut dyn RngCore) -> Result<Vec<TestCase>, Error> {
    let v = gen.sample(n, rng);
    if v.len() != n {
        return Err(Error::GeneratorContract {
            expected: n,
            got: v.len(),
        });
    }
    Ok(v)
}

fn select(
    strategy: &Strategy,
    archive: &Archive,
    gen: &mut dyn CandidateGenerator,
    rng: &mut dyn RngCore,
    counters: &mut InstrumentationCounters,
    keep_candidates: bool,
) -> Result<Selection, Error> {
    let single = |mut v: Vec<TestCase>| Selection {
        candidate_set: keep_candidates.then(|| v.clone()),
        test: v.pop().expect("one candidate"),
        candidates: 1,
        chosen: 0,
        score: None,
        counts: None,
        tokens: None,
    };
    if archive.is_empty() {
        let mut sel = single(draw(gen, 1, rng)?);
        match strategy {
            Strategy::Dist { mode, .. } => sel.tokens = Some(tokenize(&sel.test, *mode)),
            Strategy::QGram { config, .. } => sel.counts = Some(config.counts_of(&sel.test)),
            Strategy::Random => {}
        }
        return Ok(sel);
    }
    match *strategy {
        Strategy::Random => Ok(single(draw(gen, 1, rng)?)),
        Strategy::Dist { w, mode } => {
            let cands = draw(gen, w, rng)?;
            let mut toks: Vec<Vec<Token>> = cands.iter().map(|c| tokenize(c, mode)).collect();
            let mut dists = Vec::with_capacity(w);
            for t in &toks {
                dists.push(min_distance_tokens(t, &archive.tokens, counters)?);
            }
            let i = argmax_index(&dists).expect("w >= 1");
            let tokens = toks.swap_remove(i);
            let candidate_set = keep_candidates.then(|| cands.clone());
            Ok(Selection {
                test: cands.into_iter().nth(i).expect("index in range"),
                candidates: w,
                chosen: i,
                score: Some(dists[i] as f64),
                counts: None,
                tokens: Some(tokens),
                candidate_set,
            })
        }
        Strategy::QGram { w, config, diversity } => {
            let cands = draw(gen, w, rng)?;
            let mut counts: Vec<QGramCounts> = cands.iter().map(|c| config.counts_of(c)).collect();
            let scores: Vec<f64> = counts
                .iter()
                .map(|c| archive.aggregate.score_merged(c, diversity).value())
                .collect();
            counters.diversity_evals += w as u64;
            let i = argmax_index(&scores).expect("w >= 1");
            let chosen_counts = counts.swap_remove(i);
            let candidate_set = keep_candidates.then(|| cands.clone());
            Ok(Selection {
                test: cands.into_iter().nth(i).expect("index in range"),
                candidates: w,
                chosen: i,
                score: Some(scores[i]),
                counts: Some(chosen_counts),
                tokens: None,
                candidate_set,
            })
        }
    }
}

/// Runs a strategy until any stopping criterion fires.
///
/// The first executed test is a single random sample. Every later iteration
/// samples fresh candidates (one for random testing, `w` otherwise), executes
/// the best one and adds it to the archive.
pub fn run(
    strategy: &Strategy,
    gen: &mut dyn CandidateGenerator,
    exec: &mut dyn Executor,
    stop: &[StoppingCriterion],
    rng: &mut dyn RngCore,
    clock: &dyn Clock,
    options: RunOptions,
) -> Result<RunRecord, Error> {
    strategy.validate()?;
    if stop.is_empty() {
        return Err(Error::InvalidConfig("no stopping criterion".into()));
    }
    let target_count = exec.target_count();
    if stop.contains(&StoppingCriterion::AllTargetsCovered) && target_count.is_none() {
        return Err(Error::InvalidConfig(
            "all_targets_covered needs an executor with a target count".into(),
        ));
    }
    let log = options.log_iterations || options.log_candidates;
    let start = clock.now();
    let mut archive = Archive::default();
    let mut counters = InstrumentationCounters::default();
    let mut iterations = Vec::new();
    let mut covered = BTreeSet::new();
    let mut first_failure = None;
    let mut aborted = None;

    let stop_reason = loop {
        let t0 = clock.now();
        let sel = select(strategy, &archive, gen, rng, &mut counters, options.log_candidates)?;
        let t1 = clock.now();
        counters.wall_selection_time += t1.saturating_sub(t0);
        let result = exec.execute(&sel.test);
        let t2 = clock.now();
        counters.wall_execution_time += t2.saturating_sub(t1);
        let outcome = match result {
            Ok(o) => o,
            Err(fault) => {
                aborted = Some(fault.to_string());
                break StopReason::Aborted;
            }
        };
        counters.executions += 1;
        if outcome.failed && first_failure.is_none() {
            first_failure = Some(counters.executions);
        }
        let new_targets: Vec<TargetId> = outcome
            .covered
            .iter()
            .filter(|t| !covered.contains(*t))
            .copied()
            .collect();
        covered.extend(new_targets.iter().copied());
        gen.observe(&sel.test, &outcome);

        if log {
            iterations.push(IterationLog {
                execution: counters.executions,
                candidates: sel.candidates,
                chosen: sel.chosen,
                score: sel.score,
                length: sel.test.len(),
                failed: outcome.failed,
                new_targets,
                candidate_set: sel.candidate_set,
            });
        }
        if let Some(c) = &sel.counts {
            archive.aggregate.absorb(c);
        }
        if let Some(t) = sel.tokens {
            archive.tokens.push(t);
        }
        if options.retain_tests {
            archive.executed.push(sel.test);
        }
        archive.size += 1;

        let fired = stop.iter().find_map(|c| match *c {
            StoppingCriterion::MaxExecutions(n) if counters.executions >= n => {
                Some(StopReason::MaxExecutions)
            }
            StoppingCriterion::FirstFailure if outcome.failed => Some(StopReason::FirstFailure),
            StoppingCriterion::WallBudget(b) if clock.now().saturating_sub(start) >= b => {
                Some(StopReason::WallBudget)
            }
            StoppingCriterion::AllTargetsCovered if Some(covered.len()) >= target_count => {
                Some(StopReason::AllTargetsCovered)
            }
            _ => None,
        });
        if let Some(reason) = fired {
            break reason;
        }
    };

    Ok(RunRecord {
        strategy: *strategy,
        stop: stop.to_vec(),
        seed: None,
        iterations,
        executed: archive.executed,
        counters,
        first_failure,
        covered,
        stop_reason,
        aborted,
    })
}

/// Random testing: one sample per iteration, no diversity computation.
pub fn run_random(
    gen: &mut dyn CandidateGenerator,
    exec: &mut dyn Executor,
    stop: &[StoppingCriterion],
    rng: &mut dyn RngCore,
    clock: &dyn Clock,
) -> Result<RunRecord, Error> {
    run(&Strategy::Random, gen, exec, stop, rng, clock, RunOptions::default())
}

/// ART with maxi-min edit distance to every archived test.
pub fn run_art_dist(
    gen: &mut dyn CandidateGenerator,
    exec: &mut dyn Executor,
    stop: &[StoppingCriterion],
    w: usize,
    mode: TokenMode,
    rng: &mut dyn RngCore,
    clock: &dyn Clock,
) -> Result<RunRecord, Error> {
    run(&Strategy::Dist { w, mode }, gen, exec, stop, rng, clock, RunOptions::default())
}

/// ART with q-gram aggregation.
#[allow(clippy::too_many_arguments)]
pub fn run_art_qgram(
    gen: &mut dyn CandidateGenerator,
    exec: &mut dyn Executor,
    stop: &[StoppingCriterion],
    w: usize,
    config: QGramConfig,
    diversity: Diversity,
    rng: &mut dyn RngCore,
    clock: &dyn Clock,
) -> Result<RunRecord, Error> {
    let strategy = Strategy::QGram { w, config, diversity };
    run(&strategy, gen, exec, stop, rng, clock, RunOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dist,
    QGram,
}

/// Minimum ratio of test execution time to per-candidate selection time
/// (`t_e / t_d` or `t_e / t_h`) for ART to beat random testing, assuming ART
/// doubles the failure rate `theta`.
pub fn breakeven_factor(theta: f64, w: usize, algo: Algorithm) -> Result<f64, Error> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            domain: "(0, 0.5)",
        });
    }
    let w = w as f64;
    let half_rate_runs = 1.0 / (2.0 * theta);
    Ok(match algo {
        Algorithm::Dist => w * (half_rate_runs - 1.0) / 2.0,
        Algorithm::QGram => w * (half_rate_runs - 1.0) * (2.0 * theta),
    })
}
