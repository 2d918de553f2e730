//! Dec-POMDPs viewed as Gumbel-Max structural causal models.

pub mod categorical;
pub mod intervention;
pub mod model;
pub mod noise;
pub mod posterior;
pub mod rollout;

use thiserror::Error;

pub use categorical::{gumbel_argmax, Categorical};
pub use intervention::{Intervention, InterventionSet, SlotKey};
pub use model::{q_env_margin, Action, DecPomdpModel, Outcome};
pub use noise::{
    sample_context, Context, ContextNoise, ContextRecord, DrawRecord, Draws, NoiseSource, SlotId,
    SlotKind, NOISE_ALGORITHM_VERSION,
};
pub use posterior::posterior_sample_context;
pub use rollout::{default_action, rollout, Frame, Prefix, Simulator, Step, StepCounter, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScmError {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("invalid intervention: agent {agent} cannot take action {action} at t={t}")]
    InvalidIntervention { agent: usize, t: usize, action: Action },
    #[error("inconsistent trajectory: {0}")]
    InconsistentTrajectory(String),
    #[error("step budget exhausted")]
    BudgetExhausted,
}
