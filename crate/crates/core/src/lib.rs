//! Adaptive random testing with incremental q-gram aggregation.
//!
//! Classical adaptive random testing (ART) picks, among freshly sampled
//! candidates, the one farthest from every previously executed test, which
//! costs a quadratic number of distance computations over a run. This crate
//! also implements the aggregated variant: executed tests are folded into a
//! single multiset of q-gram counts, and each candidate is scored by the
//! entropy of that multiset with the candidate's q-grams added. The number of
//! diversity evaluations then grows linearly with the number of executions.
//!
//! The crate is `no_std` (with `alloc`). Time is injected through
//! [`selector::Clock`] and randomness through [`rand::RngCore`]; file formats,
//! experiment harnesses and the command line live in the `artq` crate.
//!
//! * [`qgram`]: tokenization, q-gram counts, entropy and Gini scoring
//! * [`distance`]: Levenshtein distance over tokens and maxi-min archive distance
//! * [`selector`]: random testing, distance ART and q-gram ART run loop
//! * [`nav`]: guarded navigation models, execution and candidate generation
//! * [`metrics`]: AUC, unique targets, length smoothing, hard targets
//! * [`stats`]: rank-sum test, Vargha-Delaney effect size, relative standard error

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod distance;
mod error;
pub mod metrics;
pub mod nav;
pub mod qgram;
pub mod selector;
pub mod stats;
mod test_case;

pub use error::Error;
pub use qgram::{
    count_qgrams, entropy, gini, score_candidate, tokenize, Diversity, DiversityScore, QGram,
    QGramConfig, QGramCounts, Token, TokenKind, TokenMode,
};
pub use selector::{
    breakeven_factor, run, run_art_dist, run_art_qgram, run_random, select_argmax, Algorithm,
    CandidateGenerator, Clock, ExecutionOutcome, Executor, ExecutorFault, NoClock, RunOptions,
    RunRecord, StoppingCriterion, Strategy, TargetId,
};
pub use test_case::{Action, TestCase, Value};
