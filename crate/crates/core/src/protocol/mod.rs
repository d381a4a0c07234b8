//! Compilation of function specs into the four balance-scale protocols, and
//! their execution.

mod execute;
mod plan;

use thiserror::Error;

use crate::apparatus::ApparatusError;
use crate::function_specs::SpecError;

pub use execute::{execute, ExecutionTrace, View, Weighing};
pub use plan::{
    compile, minterm_issue, plan_and, plan_general, plan_symmetric, plan_threshold,
    threshold_weight, BagRole, BagSpec, CoinIssue, DecisionRule, ProtocolKind, ProtocolPlan,
    Randomization, ReferenceSide, ResourceCount, NOTE_CUSTOM_WEIGHT, NOTE_PEN,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("malformed plan: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecuteError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Apparatus(#[from] ApparatusError),
    #[error("malformed plan: {0}")]
    Malformed(String),
    #[error("player {player} needs {needed_heavy} heavy and {needed_light} light coins but was issued fewer")]
    InsufficientCoins {
        player: usize,
        needed_heavy: u32,
        needed_light: u32,
    },
    #[error("performed {performed} comparisons, plan allows {budget}")]
    ComparisonBudget { performed: usize, budget: u64 },
}

impl From<PlanError> for ExecuteError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Spec(s) => ExecuteError::Spec(s),
            PlanError::Malformed(m) => ExecuteError::Malformed(m),
        }
    }
}
