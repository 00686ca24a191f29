use alloc::collections::BTreeSet;
use alloc::sync::Arc;

use super::model::NavigationModel;
use crate::selector::{ExecutionOutcome, Executor, ExecutorFault, TargetId};
use crate::test_case::TestCase;

/// Replays a test from the home node against a fresh state.
///
/// Each action must name a method leaving the current node, carry one
/// argument per declared parameter and satisfy the edge guard. Replay stops
/// at the first action that does not, keeping the targets covered so far.
pub fn execute_test(model: &NavigationModel, test: &TestCase) -> ExecutionOutcome {
    execute_with_faults(model, test, &BTreeSet::new())
}

fn execute_with_faults(
    model: &NavigationModel,
    test: &TestCase,
    faults: &BTreeSet<TargetId>,
) -> ExecutionOutcome {
    let mut state = model.initial_state().clone();
    let mut node = model.home();
    let mut outcome = ExecutionOutcome::default();
    for action in test.actions() {
        let Some(edge) = model.find_method(node, &action.method) else {
            break;
        };
        if action.args.len() != edge.params.len() {
            break;
        }
        if let Some(g) = &edge.guard {
            if !g.eval(&state, &action.args) {
                break;
            }
        }
        for effect in &edge.effects {
            effect.apply(&mut state, &action.args);
        }
        outcome.covered.insert(edge.id);
        if faults.contains(&edge.id) {
            outcome.failed = true;
        }
        node = edge.dest;
    }
    outcome
}

/// [`Executor`] over a navigation model. Optionally flags executions that
/// traverse designated edges as failures.
#[derive(Debug, Clone)]
pub struct ModelExecutor {
    model: Arc<NavigationModel>,
    faults: BTreeSet<TargetId>,
}

impl ModelExecutor {
    pub fn new(model: Arc<NavigationModel>) -> Self {
        ModelExecutor {
            model,
            faults: BTreeSet::new(),
        }
    }

    pub fn with_faults(mut self, faults: impl IntoIterator<Item = TargetId>) -> Self {
        self.faults = faults.into_iter().collect();
        self
    }
}

impl Executor for ModelExecutor {
    fn execute(&mut self, test: &TestCase) -> Result<ExecutionOutcome, ExecutorFault> {
        Ok(execute_with_faults(&self.model, test, &self.faults))
    }

    fn target_count(&self) -> Option<usize> {
        Some(self.model.target_count())
    }
}
