use std::collections::BTreeMap;

use artq_core::qgram::{count_qgrams, diversity, tokenize_chars};
use artq_core::{entropy, gini, score_candidate, Diversity, QGram, QGramConfig, QGramCounts, TestCase, TokenMode};
use proptest::prelude::*;

fn counts_strategy() -> impl Strategy<Value = BTreeMap<String, u64>> {
    prop::collection::btree_map("[a-e]{2}", 1u64..6, 0..8)
}

fn build(m: &BTreeMap<String, u64>) -> QGramCounts {
    let mut c = QGramCounts::new();
    for (k, &n) in m {
        c.add(QGram::chars(k), n);
    }
    c
}

fn naive_union(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> BTreeMap<String, u64> {
    let mut out = a.clone();
    for (k, n) in b {
        *out.entry(k.clone()).or_default() += n;
    }
    out
}

fn as_map(c: &QGramCounts) -> BTreeMap<String, u64> {
    c.iter()
        .map(|(g, n)| (g.tokens().iter().map(|t| t.text()).collect::<String>(), n))
        .collect()
}

proptest! {
    #[test]
    fn merge_is_pointwise_sum(a in counts_strategy(), b in counts_strategy()) {
        let (ca, cb) = (build(&a), build(&b));
        let merged = ca.merge(&cb);
        prop_assert_eq!(as_map(&merged), naive_union(&a, &b));
        prop_assert_eq!(merged.total(), ca.total() + cb.total());
        prop_assert!(merged.iter().all(|(_, n)| n > 0));
        // inputs untouched
        prop_assert_eq!(as_map(&ca), a);
        prop_assert_eq!(as_map(&cb), b);
    }

    #[test]
    fn merge_commutes_and_associates(a in counts_strategy(), b in counts_strategy(), c in counts_strategy()) {
        let (ca, cb, cc) = (build(&a), build(&b), build(&c));
        prop_assert_eq!(ca.merge(&cb), cb.merge(&ca));
        prop_assert_eq!(ca.merge(&cb).merge(&cc), ca.merge(&cb.merge(&cc)));
        prop_assert_eq!(ca.merge(&QGramCounts::new()), ca.clone());
    }

    #[test]
    fn merged_view_scores_match_materialized(a in counts_strategy(), b in counts_strategy()) {
        let (ca, cb) = (build(&a), build(&b));
        let merged = ca.merge(&cb);
        for which in [Diversity::Entropy, Diversity::Gini] {
            let view = ca.score_merged(&cb, which).value();
            let full = diversity(&merged, which).value();
            prop_assert!((view - full).abs() < 1e-9, "{which:?}: {view} vs {full}");
        }
    }

    #[test]
    fn window_count(s in "[a-z]{0,40}", q in 1usize..5) {
        let tokens = tokenize_chars(&s);
        let c = count_qgrams(&tokens, q);
        prop_assert_eq!(c.total() as usize, tokens.len().saturating_sub(q - 1));
    }

    #[test]
    fn entropy_bounds(a in counts_strategy()) {
        let c = build(&a);
        let h = entropy(&c).value();
        prop_assert!(h >= 0.0);
        if c.is_empty() {
            prop_assert_eq!(h, 0.0);
        } else {
            let max = (c.distinct() as f64).log2();
            prop_assert!(h <= max + 1e-9);
            let uniform = a.values().all(|&n| n == *a.values().next().unwrap());
            prop_assert_eq!(uniform, (h - max).abs() < 1e-9, "h={} max={}", h, max);
        }
        let g = gini(&c).value();
        prop_assert!((0.0..1.0).contains(&g));
        // both vanish exactly when at most one distinct q-gram exists
        prop_assert_eq!(h == 0.0, c.distinct() <= 1);
        prop_assert_eq!(g == 0.0, c.distinct() <= 1);
    }

    #[test]
    fn archive_order_does_not_matter(tests in prop::collection::vec("[a-c]{0,12}", 1..8)) {
        let config = QGramConfig::new(2, TokenMode::Characters);
        let cases: Vec<TestCase> = tests.iter().map(TestCase::raw).collect();
        let forward = config.counts_of_all(&cases);
        let backward = config.counts_of_all(cases.iter().rev());
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn scoring_leaves_archive_unchanged(a in counts_strategy(), cand in "[a-e]{0,20}") {
        let archive = build(&a);
        let before = archive.clone();
        let config = QGramConfig::new(2, TokenMode::Characters);
        let test = TestCase::raw(cand);
        let s1 = score_candidate(&archive, &test, &config, Diversity::Entropy).value();
        let s2 = score_candidate(&archive, &test, &config, Diversity::Entropy).value();
        prop_assert_eq!(s1.to_bits(), s2.to_bits());
        prop_assert_eq!(archive, before);
    }
}

#[test]
fn longer_q_counts_windows_within_each_test() {
    let config = QGramConfig::new(3, TokenMode::Characters);
    let c = config.counts_of_all(&[TestCase::raw("abcd"), TestCase::raw("bcd")]);
    assert_eq!(c.get(&QGram::chars("bcd")), 2);
    assert_eq!(c.get(&QGram::chars("abc")), 1);
    assert_eq!(c.total(), 3);
}
