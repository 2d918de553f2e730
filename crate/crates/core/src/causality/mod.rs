//! Candidate actual causes of an outcome event and the responsibility they
//! assign to agents.

pub mod event;
pub mod found;
pub mod pair;

use thiserror::Error;

use crate::scm::ScmError;

pub use event::{Event, Primitive};
pub use found::{assignment, insert_and_filter, FoundSet, ResponsibilityAssignment};
pub use pair::{classify, classify_trajectories, degree_vector, CandidatePair, CauseVar, WitnessVar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausalityError {
    #[error("event references a variable outside the trajectory: {0}")]
    OutOfShape(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("the outcome event does not hold on the factual trajectory")]
    NotAFailure,
    #[error(transparent)]
    Scm(#[from] ScmError),
}
