//! String-input simulation: a palindrome checker with an injected fault,
//! optional per-execution delay, and P-, F- and T-measure experiments.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use artq_core::stats::{mean, relative_standard_error};
use artq_core::{
    run, CandidateGenerator, Clock, Diversity, ExecutionOutcome, Executor, ExecutorFault, QGramConfig,
    RunOptions, RunRecord, StoppingCriterion, Strategy, TestCase, TokenMode,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_ALPHABET: &str = "abcd";
pub const DEFAULT_P_TESTS: u64 = 50;
pub const DEFAULT_F_CAP: u64 = 10_000_000;
pub const DEFAULT_RSE_THRESHOLD: f64 = 0.05;

/// Monotonic wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn start() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::start()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Random strings with a length drawn uniformly from `[min_len, max_len]`
/// and characters drawn uniformly from the alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringGenerator {
    pub max_len: usize,
    pub alphabet: Vec<char>,
    /// Draw lengths from `[0, max_len]` instead of `[1, max_len]`.
    pub allow_empty: bool,
}

impl StringGenerator {
    pub fn new(max_len: usize, alphabet: &str) -> Result<Self, CliError> {
        if max_len == 0 {
            return Err(CliError::Config("maximum string length must be >= 1".into()));
        }
        let alphabet: Vec<char> = alphabet.chars().collect();
        if alphabet.is_empty() {
            return Err(CliError::Config("alphabet must not be empty".into()));
        }
        Ok(StringGenerator {
            max_len,
            alphabet,
            allow_empty: false,
        })
    }

    pub fn min_len(&self) -> usize {
        usize::from(!self.allow_empty)
    }

    /// Number of equally likely lengths.
    pub fn length_count(&self) -> usize {
        self.max_len - self.min_len() + 1
    }

    pub fn sample_string(&self, rng: &mut dyn RngCore) -> String {
        let len = rng.gen_range(self.min_len()..=self.max_len);
        (0..len)
            .map(|_| self.alphabet[rng.gen_range(0..self.alphabet.len())])
            .collect()
    }
}

impl CandidateGenerator for StringGenerator {
    fn sample(&mut self, count: usize, rng: &mut dyn RngCore) -> Vec<TestCase> {
        (0..count).map(|_| TestCase::Raw(self.sample_string(rng))).collect()
    }
}

/// Which inputs make the faulty program disagree with the correct one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureModel {
    /// Never fails.
    Never,
    /// Fails on every input.
    Always,
    /// A loop-bound fault that misclassifies single-character strings.
    Length1,
    /// Fails on strings that start with `prefix` and are at most `max_len`
    /// characters long: one contiguous region of the input space.
    QGramRegion { prefix: String, max_len: usize },
}

impl FailureModel {
    /// The default fault for maximum length `max_len`.
    pub fn default_for(max_len: usize) -> Result<Self, CliError> {
        if max_len < 2 {
            return Err(CliError::Config("the default failure model needs L >= 2".into()));
        }
        Ok(FailureModel::Length1)
    }

    pub fn fails(&self, input: &str) -> bool {
        match self {
            FailureModel::Never => false,
            FailureModel::Always => true,
            FailureModel::Length1 => input.chars().nth(1).is_none() && !input.is_empty(),
            FailureModel::QGramRegion { prefix, max_len } => {
                input.starts_with(prefix.as_str()) && input.chars().count() <= *max_len
            }
        }
    }

    /// Exact failure probability under `gen`.
    pub fn nominal_theta(&self, gen: &StringGenerator) -> f64 {
        let lengths = gen.length_count() as f64;
        match self {
            FailureModel::Never => 0.0,
            FailureModel::Always => 1.0,
            FailureModel::Length1 => {
                if gen.max_len >= 1 {
                    1.0 / lengths
                } else {
                    0.0
                }
            }
            FailureModel::QGramRegion { prefix, max_len } => {
                let p = prefix.chars().count();
                if !prefix.chars().all(|c| gen.alphabet.contains(&c)) {
                    return 0.0;
                }
                let lo = p.max(gen.min_len());
                let hi = (*max_len).min(gen.max_len);
                if hi < lo {
                    return 0.0;
                }
                let prefix_prob = (gen.alphabet.len() as f64).powi(-(p as i32));
                (hi - lo + 1) as f64 / lengths * prefix_prob
            }
        }
    }
}

impl fmt::Display for FailureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureModel::Never => f.write_str("never"),
            FailureModel::Always => f.write_str("always"),
            FailureModel::Length1 => f.write_str("length1"),
            FailureModel::QGramRegion { prefix, max_len } => write!(f, "qgram-region:{prefix}:{max_len}"),
        }
    }
}

impl FromStr for FailureModel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "never" => return Ok(FailureModel::Never),
            "always" => return Ok(FailureModel::Always),
            "length1" => return Ok(FailureModel::Length1),
            _ => {}
        }
        let bad = || CliError::Config(format!("unknown failure model `{s}` (expected length1 or qgram-region:<prefix>:<maxlen>)"));
        let rest = s.strip_prefix("qgram-region:").ok_or_else(bad)?;
        let (prefix, max_len) = rest.rsplit_once(':').ok_or_else(bad)?;
        if prefix.is_empty() {
            return Err(bad());
        }
        let max_len = max_len.parse().map_err(|_| bad())?;
        Ok(FailureModel::QGramRegion {
            prefix: prefix.to_string(),
            max_len,
        })
    }
}

/// Correct palindrome check, after sleeping for `delay`.
pub fn palindrome_sut(input: &str, delay: Duration) -> bool {
    if !delay.is_zero() {
        thread::sleep(delay);
    }
    input.chars().eq(input.chars().rev())
}

/// Runs the palindrome checker and its faulty variant on each input; an
/// execution fails when their answers differ.
#[derive(Debug, Clone)]
pub struct SimExecutor {
    pub failure: FailureModel,
    pub delay: Duration,
}

impl Executor for SimExecutor {
    fn execute(&mut self, test: &TestCase) -> Result<ExecutionOutcome, ExecutorFault> {
        let input = test
            .as_raw()
            .ok_or_else(|| ExecutorFault("the string program only accepts raw string inputs".into()))?;
        let expected = palindrome_sut(input, self.delay);
        let actual = expected ^ self.failure.fails(input);
        Ok(ExecutionOutcome {
            failed: actual != expected,
            ..ExecutionOutcome::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    P,
    F,
    T,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::P => "P",
            MeasureKind::F => "F",
            MeasureKind::T => "T",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" | "p" => Ok(MeasureKind::P),
            "F" | "f" => Ok(MeasureKind::F),
            "T" | "t" => Ok(MeasureKind::T),
            _ => Err(CliError::Config(format!("unknown measure `{s}` (expected P, F or T)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStrategy {
    Rand,
    Dist,
    Qgram,
}

impl FromStr for SimStrategy {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rand" => Ok(SimStrategy::Rand),
            "dist" => Ok(SimStrategy::Dist),
            "qgram" => Ok(SimStrategy::Qgram),
            _ => Err(CliError::Config(format!("unknown strategy `{s}` (expected rand, dist or qgram)"))),
        }
    }
}

impl fmt::Display for SimStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimStrategy::Rand => "rand",
            SimStrategy::Dist => "dist",
            SimStrategy::Qgram => "qgram",
        })
    }
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub strategy: SimStrategy,
    pub generator: StringGenerator,
    pub failure: FailureModel,
    pub w: usize,
    pub q: usize,
    pub mode: TokenMode,
    pub delay: Duration,
    /// Test budget of the P-measure.
    pub p_tests: u64,
    /// Per-repetition execution cap of the F- and T-measures.
    pub cap: u64,
}

impl SimConfig {
    pub fn new(strategy: SimStrategy, max_len: usize, failure: FailureModel) -> Result<Self, CliError> {
        Ok(SimConfig {
            strategy,
            generator: StringGenerator::new(max_len, DEFAULT_ALPHABET)?,
            failure,
            w: 10,
            q: 2,
            mode: TokenMode::Characters,
            delay: Duration::ZERO,
            p_tests: DEFAULT_P_TESTS,
            cap: DEFAULT_F_CAP,
        })
    }

    pub fn core_strategy(&self) -> Strategy {
        match self.strategy {
            SimStrategy::Rand => Strategy::Random,
            SimStrategy::Dist => Strategy::Dist {
                w: self.w,
                mode: self.mode,
            },
            SimStrategy::Qgram => Strategy::QGram {
                w: self.w,
                config: QGramConfig::new(self.q, self.mode),
                diversity: Diversity::Entropy,
            },
        }
    }

    pub fn nominal_theta(&self) -> f64 {
        self.failure.nominal_theta(&self.generator)
    }

    fn stop(&self, kind: MeasureKind) -> Vec<StoppingCriterion> {
        match kind {
            MeasureKind::P => vec![StoppingCriterion::FirstFailure, StoppingCriterion::MaxExecutions(self.p_tests)],
            MeasureKind::F | MeasureKind::T => {
                vec![StoppingCriterion::FirstFailure, StoppingCriterion::MaxExecutions(self.cap)]
            }
        }
    }

    /// One repetition with its own seeded generator, executor and archive.
    pub fn run_once(&self, kind: MeasureKind, seed: u64, options: RunOptions) -> Result<(RunRecord, Duration), CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = self.generator.clone();
        let mut exec = SimExecutor {
            failure: self.failure.clone(),
            delay: self.delay,
        };
        let clock = MonotonicClock::start();
        let mut record = run(
            &self.core_strategy(),
            &mut gen,
            &mut exec,
            &self.stop(kind),
            &mut rng,
            &clock,
            options,
        )?;
        let elapsed = clock.now();
        record.seed = Some(seed);
        if let Some(msg) = &record.aborted {
            return Err(CliError::Config(format!("run aborted: {msg}")));
        }
        Ok((record, elapsed))
    }

    /// One repetition reduced to its measured value.
    pub fn repetition(&self, kind: MeasureKind, seed: u64) -> Result<RepOutcome, CliError> {
        let (record, elapsed) = self.run_once(kind, seed, RunOptions::minimal())?;
        let found = record.first_failure.is_some();
        let value = match kind {
            MeasureKind::P => f64::from(u8::from(found)),
            MeasureKind::F => record.counters.executions as f64,
            MeasureKind::T => elapsed.as_secs_f64(),
        };
        Ok(RepOutcome {
            value,
            executions: record.counters.executions,
            censored: kind != MeasureKind::P && !found,
            distance_calls: record.counters.distance_calls,
            diversity_evals: record.counters.diversity_evals,
            selection_time: record.counters.wall_selection_time,
            execution_time: record.counters.wall_execution_time,
        })
    }

    /// Repetitions `reps` with seeds `seed0 + i`, in parallel or in order.
    pub fn repetitions(
        &self,
        kind: MeasureKind,
        seed0: u64,
        reps: Range<u64>,
        parallel: bool,
    ) -> Result<Vec<RepOutcome>, CliError> {
        let one = |i: u64| self.repetition(kind, seed0.wrapping_add(i));
        if parallel {
            reps.into_par_iter().map(one).collect()
        } else {
            reps.map(one).collect()
        }
    }
}

/// What one repetition contributes to a [`MeasureRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RepOutcome {
    pub value: f64,
    pub executions: u64,
    /// Hit the execution cap before any failure.
    pub censored: bool,
    pub distance_calls: u64,
    pub diversity_evals: u64,
    pub selection_time: Duration,
    pub execution_time: Duration,
}

impl RepOutcome {
    pub fn value(value: f64) -> Self {
        RepOutcome {
            value,
            ..Default::default()
        }
    }
}

/// Aggregated result of repeated measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub kind: MeasureKind,
    /// Mean over repetitions: a probability, an execution count or seconds.
    pub value: f64,
    pub repetitions: usize,
    /// Relative standard error; `None` while undefined (fewer than two
    /// repetitions or a zero mean).
    pub rse: Option<f64>,
    /// The RSE target was not reached.
    pub flagged: bool,
    pub censored: usize,
    pub distance_calls: u64,
    pub diversity_evals: u64,
    pub samples: Vec<f64>,
}

impl MeasureRecord {
    pub fn from_outcomes(kind: MeasureKind, outcomes: &[RepOutcome], threshold: f64) -> Self {
        let samples: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
        let rse = relative_standard_error(&samples).ok();
        MeasureRecord {
            kind,
            value: if samples.is_empty() { f64::NAN } else { mean(&samples) },
            repetitions: samples.len(),
            rse,
            flagged: !rse.is_some_and(|r| r < threshold),
            censored: outcomes.iter().filter(|o| o.censored).count(),
            distance_calls: outcomes.iter().map(|o| o.distance_calls).sum(),
            diversity_evals: outcomes.iter().map(|o| o.diversity_evals).sum(),
            samples,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        artq_core::stats::std_dev(&self.samples) / (self.samples.len() as f64).sqrt()
    }
}

/// Adds repetitions in batches until the relative standard error drops
/// below `threshold` or `max_reps` repetitions have run.
///
/// `batch_fn` receives the repetition indices of each batch. A batch may
/// stop the loop early by returning an error.
pub fn run_until_rse<F>(
    kind: MeasureKind,
    mut batch_fn: F,
    threshold: f64,
    batch: u64,
    max_reps: u64,
) -> Result<MeasureRecord, CliError>
where
    F: FnMut(Range<u64>) -> Result<Vec<RepOutcome>, CliError>,
{
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(CliError::Config("rse threshold must be > 0".into()));
    }
    if batch == 0 || max_reps == 0 {
        return Err(CliError::Config("batch and max_reps must be >= 1".into()));
    }
    let mut outcomes: Vec<RepOutcome> = Vec::new();
    loop {
        let start = outcomes.len() as u64;
        let end = (start + batch).min(max_reps);
        outcomes.extend(batch_fn(start..end)?);
        let record = MeasureRecord::from_outcomes(kind, &outcomes, threshold);
        if !record.flagged || end >= max_reps {
            return Ok(record);
        }
    }
}

/// Measures `kind` with adaptive repetition. T-measures run sequentially
/// unless `parallel_t` is set.
pub fn measure(
    config: &SimConfig,
    kind: MeasureKind,
    seed0: u64,
    threshold: f64,
    batch: u64,
    max_reps: u64,
    parallel_t: bool,
) -> Result<MeasureRecord, CliError> {
    let parallel = kind != MeasureKind::T || parallel_t;
    run_until_rse(
        kind,
        |reps| config.repetitions(kind, seed0, reps, parallel),
        threshold,
        batch,
        max_reps,
    )
}

/// Exactly `reps` repetitions, no adaptive stopping.
pub fn measure_fixed(
    config: &SimConfig,
    kind: MeasureKind,
    seed0: u64,
    reps: u64,
    parallel: bool,
) -> Result<MeasureRecord, CliError> {
    let outcomes = config.repetitions(kind, seed0, 0..reps, parallel)?;
    Ok(MeasureRecord::from_outcomes(kind, &outcomes, DEFAULT_RSE_THRESHOLD))
}

/// Monte Carlo estimate of the failure probability of `failure` under `gen`.
pub fn estimate_theta(gen: &StringGenerator, failure: &FailureModel, samples: u64, seed: u64) -> f64 {
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c));
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n).filter(|_| failure.fails(&gen.sample_string(&mut rng))).count() as u64
        })
        .sum();
    hits as f64 / samples as f64
}
