use thiserror::Error;

use crate::formula::Name;

/// Precondition failures shared by the evaluators and the game builder.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("transition relation `{action}` is not total: state {state} has no successor")]
    NotTotal { state: usize, action: Name },
    #[error("environment entry `{var}` ranges over {got} states, system has {want}")]
    EnvWidth { var: Name, got: usize, want: usize },
}
