//! Edit distances for the pairwise-distance baseline.

use alloc::vec::Vec;

use crate::error::Error;
use crate::qgram::{tokenize, TokenMode};
use crate::selector::InstrumentationCounters;
use crate::test_case::TestCase;

/// Unit-cost Levenshtein distance (insert, delete, substitute).
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Minimum edit distance from `candidate` to any already tokenized archive
/// member. Counts one distance computation per archive member.
pub fn min_distance_tokens<T: PartialEq>(
    candidate: &[T],
    archive: &[Vec<T>],
    counters: &mut InstrumentationCounters,
) -> Result<usize, Error> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    counters.distance_calls += archive.len() as u64;
    Ok(archive
        .iter()
        .map(|z| edit_distance(candidate, z))
        .min()
        .expect("archive is non-empty"))
}

/// Maxi-min building block: the candidate's smallest distance to the archive.
pub fn min_distance_to_archive(
    candidate: &TestCase,
    archive: &[TestCase],
    mode: TokenMode,
    counters: &mut InstrumentationCounters,
) -> Result<usize, Error> {
    let tokenized: Vec<_> = archive.iter().map(|t| tokenize(t, mode)).collect();
    min_distance_tokens(&tokenize(candidate, mode), &tokenized, counters)
}
