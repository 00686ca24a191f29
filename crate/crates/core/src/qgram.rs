//! Tokenization, q-gram counting and diversity scoring.
//!
//! The archive of executed tests is summarised by [`QGramCounts`], a multiset
//! of q-grams. Adding a test to the archive is a pointwise sum of counts, and
//! a candidate is scored by the diversity (entropy or Gini impurity) of the
//! archive counts merged with the candidate's own counts.
//!
//! [`QGramCounts`] caches `Σ c·log2(c)` and `Σ c²` over its entries, so the
//! diversity of a merged view can be evaluated by touching only the keys of
//! the candidate. Scoring cost is proportional to the candidate size and does
//! not depend on how many tests the archive holds.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::hash::{Hash, Hasher};

use hashbrown::HashMap;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::test_case::TestCase;

const START_SENTINEL: &str = "\u{2}";
const END_SENTINEL: &str = "\u{3}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Method,
    MethodWithArgs,
    Char,
    /// Start/end marker, only emitted when sentinels are enabled.
    Boundary,
}

/// A token of a serialized test. Equality, ordering and hashing use the text
/// only.
#[derive(Clone)]
pub struct Token {
    kind: TokenKind,
    text: Arc<str>,
}

impl Token {
    /// # Panics
    /// If `text` is empty.
    pub fn new(kind: TokenKind, text: impl Into<Arc<str>>) -> Self {
        let text = text.into();
        assert!(!text.is_empty(), "token text must be non-empty");
        Token { kind, text }
    }

    pub fn method(text: &str) -> Self {
        Token::new(TokenKind::Method, text)
    }

    pub fn char(c: char) -> Self {
        let mut buf = [0u8; 4];
        Token::new(TokenKind::Char, &*c.encode_utf8(&mut buf))
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Token {}

impl Hash for Token {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.text.hash(state);
    }
}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.text.cmp(&other.text)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.text)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// How a test is serialized into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMode {
    /// One token per method name.
    SequenceOnly,
    /// One token per method invocation, arguments included.
    SequencePlusInputs,
    /// One token per character.
    Characters,
}

/// Serializes a test into tokens.
///
/// Raw string tests always tokenize per character. An action sequence in
/// `Characters` mode tokenizes the characters of its rendered actions,
/// concatenated.
pub fn tokenize(test: &TestCase, mode: TokenMode) -> Vec<Token> {
    match (test, mode) {
        (TestCase::Raw(s), _) => tokenize_chars(s),
        (TestCase::Actions(actions), TokenMode::SequenceOnly) => {
            actions.iter().map(|a| Token::method(&a.method)).collect()
        }
        (TestCase::Actions(actions), TokenMode::SequencePlusInputs) => actions
            .iter()
            .map(|a| {
                if a.args.is_empty() {
                    Token::method(&a.method)
                } else {
                    Token::new(TokenKind::MethodWithArgs, a.render())
                }
            })
            .collect(),
        (TestCase::Actions(actions), TokenMode::Characters) => {
            let rendered: String = actions.iter().map(|a| a.render()).collect();
            tokenize_chars(&rendered)
        }
    }
}

pub fn tokenize_chars(s: &str) -> Vec<Token> {
    s.chars().map(Token::char).collect()
}

/// Wraps a token sequence in start and end markers.
pub fn with_sentinels(mut tokens: Vec<Token>) -> Vec<Token> {
    tokens.insert(0, Token::new(TokenKind::Boundary, START_SENTINEL));
    tokens.push(Token::new(TokenKind::Boundary, END_SENTINEL));
    tokens
}

/// A window of `Q` consecutive tokens.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QGram(Box<[Token]>);

impl QGram {
    pub fn new(tokens: impl Into<Box<[Token]>>) -> Self {
        QGram(tokens.into())
    }

    /// A q-gram of method tokens, e.g. `QGram::methods(&["goToFind", "find"])`.
    pub fn methods(names: &[&str]) -> Self {
        QGram(names.iter().map(|n| Token::method(n)).collect())
    }

    /// A q-gram of character tokens, e.g. `QGram::chars("ab")`.
    pub fn chars(s: &str) -> Self {
        QGram(s.chars().map(Token::char).collect())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for QGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("QGram").field(&self.0).finish()
    }
}

impl fmt::Display for QGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

fn c_log2_c(c: u64) -> f64 {
    if c <= 1 {
        0.0
    } else {
        let c = c as f64;
        c * libm::log2(c)
    }
}

/// A multiset of q-grams with occurrence counts.
///
/// Entries with a zero count are never stored, and `total` is always the sum
/// of all counts.
#[derive(Clone, Default)]
pub struct QGramCounts {
    counts: HashMap<QGram, u64, FxBuildHasher>,
    total: u64,
    sum_c_log_c: f64,
    sum_sq: u128,
}

impl QGramCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct q-grams.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, gram: &QGram) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QGram, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Entries sorted by q-gram text.
    pub fn sorted(&self) -> Vec<(QGram, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, &c)| (k.clone(), c)).collect();
        v.sort();
        v
    }

    /// Adds `n` occurrences of `gram`. Adding zero is a no-op.
    pub fn add(&mut self, gram: QGram, n: u64) {
        if n == 0 {
            return;
        }
        let slot = self.counts.entry(gram).or_insert(0);
        let old = *slot;
        let new = old + n;
        *slot = new;
        self.total += n;
        self.sum_c_log_c += c_log2_c(new) - c_log2_c(old);
        self.sum_sq += (new as u128) * (new as u128) - (old as u128) * (old as u128);
    }

    /// In-place pointwise sum: the incremental archive update.
    pub fn absorb(&mut self, delta: &QGramCounts) {
        for (k, &v) in &delta.counts {
            match self.counts.get_mut(k) {
                Some(slot) => {
                    let old = *slot;
                    let new = old + v;
                    *slot = new;
                    self.total += v;
                    self.sum_c_log_c += c_log2_c(new) - c_log2_c(old);
                    self.sum_sq += (new as u128) * (new as u128) - (old as u128) * (old as u128);
                }
                None => self.add(k.clone(), v),
            }
        }
    }

    /// Pointwise sum, leaving both operands untouched.
    pub fn merge(&self, delta: &QGramCounts) -> QGramCounts {
        let mut out = self.clone();
        out.absorb(delta);
        out
    }

    /// Diversity of `self ⊕ delta`, evaluated without building the merged
    /// multiset. Only the keys of `delta` are visited.
    pub fn score_merged(&self, delta: &QGramCounts, diversity: Diversity) -> DiversityScore {
        let total = self.total + delta.total;
        if total == 0 {
            return DiversityScore(0.0);
        }
        match diversity {
            Diversity::Entropy => {
                let mut s = self.sum_c_log_c;
                for (k, &d) in &delta.counts {
                    let c = self.get(k);
                    s += c_log2_c(c + d) - c_log2_c(c);
                }
                let n = total as f64;
                DiversityScore::clamped(libm::log2(n) - s / n)
            }
            Diversity::Gini => {
                let mut sq = self.sum_sq;
                for (k, &d) in &delta.counts {
                    let c = self.get(k) as u128;
                    let d = d as u128;
                    sq += (c + d) * (c + d) - c * c;
                }
                DiversityScore::clamped(gini_from(sq, total))
            }
        }
    }
}

impl PartialEq for QGramCounts {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.counts == other.counts
    }
}

impl Eq for QGramCounts {}

impl fmt::Debug for QGramCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.sorted().into_iter().map(|(k, v)| (k.to_string(), v)))
            .finish()
    }
}

impl FromIterator<(QGram, u64)> for QGramCounts {
    fn from_iter<I: IntoIterator<Item = (QGram, u64)>>(iter: I) -> Self {
        let mut c = QGramCounts::new();
        for (k, v) in iter {
            c.add(k, v);
        }
        c
    }
}

/// Counts every window of `q` consecutive tokens. Sequences shorter than `q`
/// contribute nothing.
///
/// # Panics
/// If `q == 0`.
pub fn count_qgrams(tokens: &[Token], q: usize) -> QGramCounts {
    assert!(q >= 1, "q must be at least 1");
    let mut counts = QGramCounts::new();
    for window in tokens.windows(q) {
        counts.add(QGram(window.into()), 1);
    }
    counts
}

/// Diversity function applied to q-gram counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diversity {
    Entropy,
    Gini,
}

/// A non-negative diversity value: bits for entropy, unitless for Gini.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DiversityScore(f64);

impl DiversityScore {
    fn clamped(v: f64) -> Self {
        DiversityScore(if v < 0.0 { 0.0 } else { v })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Shannon entropy in bits of the q-gram distribution.
pub fn entropy(counts: &QGramCounts) -> DiversityScore {
    if counts.total == 0 {
        return DiversityScore(0.0);
    }
    let n = counts.total as f64;
    let h: f64 = counts
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum();
    DiversityScore::clamped(h)
}

/// Gini impurity `1 - Σ p²`.
pub fn gini(counts: &QGramCounts) -> DiversityScore {
    if counts.total == 0 {
        return DiversityScore(0.0);
    }
    let sq: u128 = counts
        .counts
        .values()
        .map(|&c| (c as u128) * (c as u128))
        .sum();
    DiversityScore::clamped(gini_from(sq, counts.total))
}

fn gini_from(sum_sq: u128, total: u64) -> f64 {
    let n = total as u128;
    // Integer numerator keeps degenerate cases exactly zero.
    let num = n * n - sum_sq;
    num as f64 / (n * n) as f64
}

pub fn diversity(counts: &QGramCounts, which: Diversity) -> DiversityScore {
    match which {
        Diversity::Entropy => entropy(counts),
        Diversity::Gini => gini(counts),
    }
}

/// How tests are embedded into q-gram counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGramConfig {
    pub q: usize,
    pub mode: TokenMode,
    /// Wrap each test in start/end markers before windowing.
    #[serde(default)]
    pub sentinels: bool,
}

impl QGramConfig {
    pub fn new(q: usize, mode: TokenMode) -> Self {
        QGramConfig {
            q,
            mode,
            sentinels: false,
        }
    }

    /// q-gram counts of a single test. Windows never span across tests.
    pub fn counts_of(&self, test: &TestCase) -> QGramCounts {
        let tokens = tokenize(test, self.mode);
        if self.sentinels {
            count_qgrams(&with_sentinels(tokens), self.q)
        } else {
            count_qgrams(&tokens, self.q)
        }
    }

    /// Aggregate counts of a set of tests (the archive embedding).
    pub fn counts_of_all<'a>(&self, tests: impl IntoIterator<Item = &'a TestCase>) -> QGramCounts {
        let mut acc = QGramCounts::new();
        for t in tests {
            acc.absorb(&self.counts_of(t));
        }
        acc
    }
}

/// Diversity of the archive counts merged with the candidate's counts. The
/// archive is not modified.
pub fn score_candidate(
    archive: &QGramCounts,
    candidate: &TestCase,
    config: &QGramConfig,
    which: Diversity,
) -> DiversityScore {
    archive.score_merged(&config.counts_of(candidate), which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_case::{Action, Value};
    use alloc::vec;

    fn chars_counts(strings: &[&str], q: usize) -> QGramCounts {
        let mut acc = QGramCounts::new();
        for s in strings {
            acc.absorb(&count_qgrams(&tokenize_chars(s), q));
        }
        acc
    }

    fn running_example() -> (TestCase, TestCase, TestCase) {
        let t1 = TestCase::methods(["goToFind", "goToIndex"]);
        let w1 = TestCase::Actions(vec![
            Action::with_args("findOwner", vec![Value::from("John")]),
            Action::new("goToIndex"),
        ]);
        let w2 = TestCase::Actions(vec![
            Action::new("goToFind"),
            Action::with_args("find", vec![1.into()]),
            Action::new("goToFind"),
            Action::with_args("find", vec![2.into()]),
        ]);
        (t1, w1, w2)
    }

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text()).collect()
    }

    #[test]
    fn tokenize_modes() {
        let (_, _, w2) = running_example();
        assert_eq!(
            texts(&tokenize(&w2, TokenMode::SequenceOnly)),
            ["goToFind", "find", "goToFind", "find"]
        );
        assert_eq!(
            texts(&tokenize(&w2, TokenMode::SequencePlusInputs)),
            ["goToFind", "find(1)", "goToFind", "find(2)"]
        );
        assert!(tokenize(&TestCase::raw(""), TokenMode::Characters).is_empty());
        let kinds: Vec<_> = tokenize(&w2, TokenMode::SequencePlusInputs)
            .iter()
            .map(Token::kind)
            .collect();
        assert_eq!(
            kinds,
            [
                TokenKind::Method,
                TokenKind::MethodWithArgs,
                TokenKind::Method,
                TokenKind::MethodWithArgs
            ]
        );
    }

    #[test]
    fn bigram_counts_of_worked_example() {
        let c = chars_counts(&["aba", "abb", "bc"], 2);
        assert_eq!(
            c.sorted(),
            vec![
                (QGram::chars("ab"), 2),
                (QGram::chars("ba"), 1),
                (QGram::chars("bb"), 1),
                (QGram::chars("bc"), 1)
            ]
        );
        assert_eq!(c.total(), 5);

        let abc = chars_counts(&["abc"], 2);
        assert_eq!(abc.sorted(), vec![(QGram::chars("ab"), 1), (QGram::chars("bc"), 1)]);

        let merged = c.merge(&abc);
        assert_eq!(
            merged.sorted(),
            vec![
                (QGram::chars("ab"), 3),
                (QGram::chars("ba"), 1),
                (QGram::chars("bb"), 1),
                (QGram::chars("bc"), 2)
            ]
        );
        // operands untouched
        assert_eq!(c.total(), 5);
        assert_eq!(abc.total(), 2);
        assert!((entropy(&merged).value() - 1.842_371_9).abs() < 1e-6);
    }

    #[test]
    fn short_sequences_have_no_windows() {
        let c = count_qgrams(&tokenize_chars("a"), 2);
        assert!(c.is_empty());
        assert_eq!(c.total(), 0);
        assert_eq!(count_qgrams(&tokenize_chars("abcd"), 3).total(), 2);
    }

    #[test]
    fn sentinels_make_single_chars_count() {
        let mut cfg = QGramConfig::new(2, TokenMode::Characters);
        assert_eq!(cfg.counts_of(&TestCase::raw("x")).total(), 0);
        cfg.sentinels = true;
        assert_eq!(cfg.counts_of(&TestCase::raw("x")).total(), 2);
        assert_eq!(cfg.counts_of(&TestCase::raw("")).total(), 1);
    }

    #[test]
    fn entropy_and_gini_simple_cases() {
        let one: QGramCounts = [(QGram::chars("x"), 5)].into_iter().collect();
        assert_eq!(entropy(&one).value(), 0.0);
        assert_eq!(gini(&one).value(), 0.0);
        let four: QGramCounts = ["a", "b", "c", "d"]
            .iter()
            .map(|s| (QGram::chars(s), 1))
            .collect();
        assert!((entropy(&four).value() - 2.0).abs() < 1e-12);
        let two: QGramCounts = [(QGram::chars("a"), 1), (QGram::chars("b"), 1)]
            .into_iter()
            .collect();
        assert!((gini(&two).value() - 0.5).abs() < 1e-12);
        assert_eq!(entropy(&QGramCounts::new()).value(), 0.0);
        assert_eq!(gini(&QGramCounts::new()).value(), 0.0);
    }

    #[test]
    fn gini_of_merged_example() {
        let merged = chars_counts(&["aba", "abb", "bc", "abc"], 2);
        // 1 - (9 + 1 + 1 + 4) / 49
        assert!((gini(&merged).value() - 34.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn table_three_scores() {
        let (t1, w1, w2) = running_example();
        let seq = QGramConfig::new(2, TokenMode::SequenceOnly);
        let si = QGramConfig::new(2, TokenMode::SequencePlusInputs);
        let archive = seq.counts_of(&t1);
        assert_eq!(archive.sorted(), vec![(QGram::methods(&["goToFind", "goToIndex"]), 1)]);
        let h = |cfg: &QGramConfig, w: &TestCase| {
            score_candidate(&cfg.counts_of(&t1), w, cfg, Diversity::Entropy).value()
        };
        assert!((h(&seq, &w1) - 1.0).abs() < 1e-9);
        assert!((h(&seq, &w2) - 1.5).abs() < 1e-9);
        assert!((h(&si, &w1) - 1.0).abs() < 1e-9);
        assert!((h(&si, &w2) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn merged_view_matches_materialized_merge() {
        let base = chars_counts(&["abracadabra", "banana", "cabbage"], 2);
        let delta = chars_counts(&["alfalfa"], 2);
        for which in [Diversity::Entropy, Diversity::Gini] {
            let fast = base.score_merged(&delta, which).value();
            let slow = diversity(&base.merge(&delta), which).value();
            assert!((fast - slow).abs() < 1e-12, "{which:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn scoring_twice_is_bit_identical() {
        let (t1, _, w2) = running_example();
        let cfg = QGramConfig::new(2, TokenMode::SequenceOnly);
        let archive = cfg.counts_of(&t1);
        let before = archive.clone();
        let a = score_candidate(&archive, &w2, &cfg, Diversity::Entropy);
        let b = score_candidate(&archive, &w2, &cfg, Diversity::Entropy);
        assert_eq!(a.value().to_bits(), b.value().to_bits());
        assert_eq!(archive, before);
    }

    #[test]
    #[should_panic(expected = "q must be at least 1")]
    fn zero_q_is_rejected() {
        count_qgrams(&tokenize_chars("ab"), 0);
    }
}
