use alloc::collections::{BTreeSet, VecDeque};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::model::{NavigationModel, ParamDomain, ParamSpec};
use super::state::AppState;
use crate::selector::{CandidateGenerator, ExecutionOutcome, TargetId};
use crate::test_case::{Action, TestCase, Value};

pub const DEFAULT_MAX_WALK_LEN: usize = 40;

/// Values drawn for a reference parameter whose collection is empty.
pub const FALLBACK_REF_RANGE: (i64, i64) = (0, 9);

/// Shortest edge path from `from` to `to`, ignoring guards. Ties resolve by
/// edge declaration order.
pub fn shortest_path(model: &NavigationModel, from: usize, to: usize) -> Option<Vec<usize>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut via: Vec<Option<usize>> = vec![None; model.nodes().len()];
    let mut seen = vec![false; model.nodes().len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        for &e in model.outgoing(n) {
            let d = model.edges()[e].dest;
            if seen[d] {
                continue;
            }
            seen[d] = true;
            via[d] = Some(e);
            if d == to {
                let mut path = Vec::new();
                let mut cur = to;
                while let Some(e) = via[cur] {
                    path.push(e);
                    cur = model.edges()[e].source;
                    if cur == from {
                        break;
                    }
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(d);
        }
    }
    None
}

/// Random walk of `len` edges from the home node; shorter if it reaches a
/// node without outgoing edges.
pub fn random_walk(model: &NavigationModel, len: usize, rng: &mut dyn RngCore) -> (Vec<usize>, usize) {
    let mut node = model.home();
    let mut edges = Vec::with_capacity(len);
    for _ in 0..len {
        let Some(&e) = model.outgoing(node).choose(rng) else {
            break;
        };
        edges.push(e);
        node = model.edges()[e].dest;
    }
    (edges, node)
}

fn draw_value(p: &ParamSpec, state: &AppState, rng: &mut dyn RngCore) -> Value {
    match &p.domain {
        ParamDomain::IntRange(lo, hi) => Value::Int(rng.gen_range(*lo..=*hi)),
        ParamDomain::StringPool(pool) => Value::Str(pool.choose(rng).cloned().unwrap_or_default()),
        ParamDomain::RefCollection(c) => match state.collection(c).and_then(|items| items.choose(rng)) {
            Some(v) => v.clone(),
            None => Value::Int(rng.gen_range(FALLBACK_REF_RANGE.0..=FALLBACK_REF_RANGE.1)),
        },
    }
}

/// Turns an edge path into a concrete test. Argument values come from each
/// parameter's domain; reference parameters draw from the state expected
/// after the preceding edges' effects.
pub fn instantiate(model: &NavigationModel, path: &[usize], rng: &mut dyn RngCore) -> TestCase {
    let mut state = model.initial_state().clone();
    let mut actions = Vec::with_capacity(path.len());
    for &e in path {
        let edge = &model.edges()[e];
        let args: Vec<Value> = edge.params.iter().map(|p| draw_value(p, &state, rng)).collect();
        for effect in &edge.effects {
            effect.apply(&mut state, &args);
        }
        actions.push(Action::with_args(edge.method.clone(), args));
    }
    TestCase::Actions(actions)
}

/// One random test aimed at a not-yet-covered edge.
///
/// Walks randomly from home for a length drawn from `[1, max_walk_len]`, then
/// follows the shortest path to the source of a randomly chosen uncovered
/// edge and takes that edge. Unreachable edges are dropped and another is
/// tried; when none is left (or nothing is uncovered) the plain walk is used.
pub fn generate_candidate(
    model: &NavigationModel,
    max_walk_len: usize,
    uncovered: &[TargetId],
    rng: &mut dyn RngCore,
) -> TestCase {
    let len = rng.gen_range(1..=max_walk_len.max(1));
    let (mut path, last) = random_walk(model, len, rng);
    let mut pool: Vec<TargetId> = uncovered.to_vec();
    while !pool.is_empty() {
        let i = rng.gen_range(0..pool.len());
        let target = model.edge(pool[i]);
        if let Some(link) = shortest_path(model, last, target.source) {
            path.extend(link);
            path.push(target.id.0 as usize);
            break;
        }
        pool.swap_remove(i);
    }
    instantiate(model, &path, rng)
}

/// Candidate generator over a navigation model that tracks run coverage.
#[derive(Debug, Clone)]
pub struct NavGenerator {
    model: Arc<NavigationModel>,
    max_walk_len: usize,
    covered: BTreeSet<TargetId>,
}

impl NavGenerator {
    pub fn new(model: Arc<NavigationModel>, max_walk_len: usize) -> Self {
        NavGenerator {
            model,
            max_walk_len,
            covered: BTreeSet::new(),
        }
    }

    pub fn covered(&self) -> &BTreeSet<TargetId> {
        &self.covered
    }

    pub fn uncovered(&self) -> Vec<TargetId> {
        self.model
            .targets()
            .filter(|t| !self.covered.contains(t))
            .collect()
    }
}

impl CandidateGenerator for NavGenerator {
    fn sample(&mut self, count: usize, rng: &mut dyn RngCore) -> Vec<TestCase> {
        let uncovered = self.uncovered();
        (0..count)
            .map(|_| generate_candidate(&self.model, self.max_walk_len, &uncovered, rng))
            .collect()
    }

    fn observe(&mut self, _test: &TestCase, outcome: &ExecutionOutcome) {
        self.covered.extend(outcome.covered.iter().copied());
    }
}
