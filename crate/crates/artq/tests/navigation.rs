use std::sync::Arc;

use artq::model_file::{bundled, parse_model, BUNDLED};
use artq::CliError;
use artq_core::metrics::hard_targets;
use artq_core::nav::{
    execute_test, generate_candidate, ModelError, ModelExecutor, NavGenerator, NavigationModel,
    DEFAULT_MAX_WALK_LEN,
};
use artq_core::{run, Action, NoClock, RunOptions, StoppingCriterion, Strategy, TestCase, Value};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn petclinic() -> NavigationModel {
    bundled("petclinic-like").unwrap()
}

fn feasible_path() -> TestCase {
    TestCase::Actions(vec![
        Action::new("goToFind"),
        Action::new("addNewOwner"),
        Action::with_args("add", vec![Value::from("John"), Value::from("My street")]),
        Action::new("goToFind"),
        Action::with_args("find", vec![Value::Int(0)]),
    ])
}

#[test]
fn petclinic_feasible_and_infeasible_paths() {
    let model = petclinic();
    let full = execute_test(&model, &feasible_path());
    assert_eq!(full.covered.len(), 5);
    let names: Vec<&str> = full.covered.iter().map(|t| model.edge(*t).name.as_str()).collect();
    assert_eq!(
        names,
        ["index.goToFind", "find.addNewOwner", "find.find", "add.add", "info.goToFind"]
    );

    let blocked = TestCase::Actions(vec![
        Action::new("goToFind"),
        Action::with_args("find", vec![Value::Int(0)]),
    ]);
    let out = execute_test(&model, &blocked);
    assert_eq!(out.covered.len(), 1);
    assert!(!out.failed);

    assert!(execute_test(&model, &TestCase::Actions(vec![])).covered.is_empty());
}

#[test]
fn replay_stops_at_unknown_method_or_wrong_arity() {
    let model = petclinic();
    let unknown = TestCase::methods(["goToFind", "teleport", "goToIndex"]);
    assert_eq!(execute_test(&model, &unknown).covered.len(), 1);
    let arity = TestCase::Actions(vec![Action::new("goToFind"), Action::new("find")]);
    assert_eq!(execute_test(&model, &arity).covered.len(), 1);
}

#[test]
fn execution_is_deterministic_and_prefix_closed() {
    let model = Arc::new(bundled("webshop").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let all: Vec<_> = model.targets().collect();
    for _ in 0..200 {
        let test = generate_candidate(&model, DEFAULT_MAX_WALK_LEN, &all, &mut rng);
        let a = execute_test(&model, &test);
        assert_eq!(a, execute_test(&model, &test));
        let actions = test.actions();
        for cut in 0..actions.len() {
            let prefix = TestCase::Actions(actions[..cut].to_vec());
            assert!(execute_test(&model, &prefix).covered.is_subset(&a.covered));
        }
    }
}

#[test]
fn guards_do_not_touch_state() {
    for (name, _) in BUNDLED {
        let model = bundled(name).unwrap();
        let before = model.initial_state().clone();
        for edge in model.edges() {
            if let Some(g) = &edge.guard {
                let args: Vec<Value> = edge.params.iter().map(|_| Value::Int(0)).collect();
                let first = g.eval(model.initial_state(), &args);
                assert_eq!(first, g.eval(model.initial_state(), &args));
            }
        }
        assert_eq!(&before, model.initial_state());
    }
}

#[test]
fn candidate_ends_with_the_only_uncovered_home_edge() {
    let model = petclinic();
    let target = model.edge_by_name("index.findOwner").unwrap().id;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let test = generate_candidate(&model, DEFAULT_MAX_WALK_LEN, &[target], &mut rng);
        assert_eq!(test.actions().last().unwrap().method, "findOwner", "seed {seed}");
    }
}

#[test]
fn walk_length_is_uniform_when_everything_is_covered() {
    // Every star edge is a self-loop on home, so candidate length equals walk length.
    let model = bundled("star").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let mut bins = [0u32; DEFAULT_MAX_WALK_LEN];
    for _ in 0..n {
        let len = generate_candidate(&model, DEFAULT_MAX_WALK_LEN, &[], &mut rng).len();
        assert!((1..=DEFAULT_MAX_WALK_LEN).contains(&len));
        bins[len - 1] += 1;
    }
    let expected = n as f64 / DEFAULT_MAX_WALK_LEN as f64;
    let chi2: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    // 39 degrees of freedom, 1% level.
    assert!(chi2 < 62.43, "chi2 = {chi2}");
}

#[test]
fn generator_tracks_coverage_through_observe() {
    let model = Arc::new(petclinic());
    let mut gen = NavGenerator::new(Arc::clone(&model), DEFAULT_MAX_WALK_LEN);
    let mut exec = ModelExecutor::new(Arc::clone(&model));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rec = run(
        &Strategy::Random,
        &mut gen,
        &mut exec,
        &[StoppingCriterion::MaxExecutions(30)],
        &mut rng,
        &NoClock,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(gen.covered(), &rec.covered);
    assert_eq!(gen.uncovered().len(), model.target_count() - rec.covered.len());
}

fn rand_runs(model: &Arc<NavigationModel>, reps: u64, budget: u64) -> Vec<artq_core::RunRecord> {
    (0..reps)
        .map(|seed| {
            let mut gen = NavGenerator::new(Arc::clone(model), DEFAULT_MAX_WALK_LEN);
            let mut exec = ModelExecutor::new(Arc::clone(model));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run(
                &Strategy::Random,
                &mut gen,
                &mut exec,
                &[StoppingCriterion::MaxExecutions(budget), StoppingCriterion::AllTargetsCovered],
                &mut rng,
                &NoClock,
                RunOptions::minimal(),
            )
            .unwrap()
        })
        .collect()
}

const FIXTURE: &str = r#"{
  "schema": 1,
  "name": "fixture",
  "nodes": ["A", "B", "C"],
  "home": "A",
  "state": { "variables": { "n": 0 } },
  "edges": [
    { "id": "a.b", "source": "A", "dest": "B", "method": "toB" },
    { "id": "b.a", "source": "B", "dest": "A", "method": "toA" },
    { "id": "b.tick", "source": "B", "dest": "B", "method": "tick",
      "effects": [["set", "n", ["+", ["var", "n"], 1]]] },
    { "id": "b.deep", "source": "B", "dest": "C", "method": "deep",
      "guard": [">=", ["var", "n"], 45] },
    { "id": "a.never", "source": "A", "dest": "C", "method": "never", "guard": false },
    { "id": "c.a", "source": "C", "dest": "A", "method": "back" }
  ]
}"#;

#[test]
fn unreachable_and_deep_targets_are_hard() {
    let model = Arc::new(parse_model(FIXTURE, "fixture").unwrap());
    let hard = hard_targets(&model, &rand_runs(&model, 5, 300)).unwrap();
    let names: Vec<&str> = hard.iter().map(|t| model.edge(*t).name.as_str()).collect();
    assert_eq!(names, ["b.deep", "a.never", "c.a"]);
    assert!(hard_targets(&model, &[]).is_err());
}

fn semantic(text: &str) -> ModelError {
    match parse_model(text, "t") {
        Err(CliError::Semantic { source, .. }) => source,
        other => panic!("expected a semantic error, got {other:?}"),
    }
}

#[test]
fn invalid_models_are_rejected() {
    let doc = |nodes: &str, edges: &str| {
        format!(r#"{{"schema": 1, "name": "x", "nodes": {nodes}, "home": "A", "state": {{"variables": {{"v": 1}}}}, "edges": {edges}}}"#)
    };
    let edge = |id: &str, src: &str, dst: &str, extra: &str| {
        format!(r#"{{"id": "{id}", "source": "{src}", "dest": "{dst}", "method": "{id}"{extra}}}"#)
    };
    assert_eq!(semantic(&doc(r#"["A"]"#, "[]")), ModelError::NoEdges);
    assert!(matches!(
        semantic(&doc(r#"["A"]"#, &format!("[{}]", edge("e", "A", "Z", "")))),
        ModelError::UnknownNode { .. }
    ));
    assert!(matches!(
        semantic(&doc(r#"["A"]"#, &format!("[{}, {}]", edge("e", "A", "A", ""), edge("e", "A", "A", "")))),
        ModelError::DuplicateEdgeId(_)
    ));
    assert!(matches!(
        semantic(&doc(r#"["A", "A"]"#, &format!("[{}]", edge("e", "A", "A", "")))),
        ModelError::DuplicateNode(_)
    ));
    assert!(matches!(
        semantic(&doc(
            r#"["A"]"#,
            &format!("[{}]", edge("e", "A", "A", r#", "guard": ["==", ["var", "missing"], 1]"#))
        )),
        ModelError::Expr { .. }
    ));
}

#[test]
fn schema_errors_carry_a_position() {
    let text = "{\n  \"schema\": 1,\n  \"nodes\": [\"A\",\n  \"home\": \"A\"\n}";
    match parse_model(text, "broken.json") {
        Err(CliError::Schema { line, column, origin, .. }) => {
            assert_eq!(origin, "broken.json");
            assert_eq!(line, 4);
            assert!(column > 0);
        }
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn bundled_models_load() {
    for (name, _) in BUNDLED {
        let model = bundled(name).unwrap();
        assert_eq!(&model.name, name);
        assert!(model.target_count() > 0);
    }
    assert!(bundled("nope").is_err());
}
