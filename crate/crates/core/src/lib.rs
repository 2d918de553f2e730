//! Responsibility attribution for teams of agents in finite Dec-POMDPs.
//!
//! The environment and the agents' policies are turned into a Gumbel-Max
//! structural causal model ([`scm`]). Sets of interventions on the agents'
//! actions are classified as candidate actual cause / witness pairs
//! ([`causality`]) and searched for with a budgeted Monte Carlo tree search
//! ([`mcts`]) or one of the reference searchers ([`baselines`]).
//!
//! Probabilities are generic over [`scalar::ProbFloat`] (`f32`/`f64`), search
//! statistics over [`scalar::Scalar`] (`f32`, `f64` or the exact rational
//! [`Exact`]). The aliases below fix the common choices.

pub mod baselines;
pub mod causality;
pub mod envs;
pub mod harness;
pub mod mcts;
pub mod scalar;
pub mod scm;
pub mod search_tree;

pub use causality::{CandidatePair, Event, FoundSet, ResponsibilityAssignment};
pub use scalar::{Exact, ProbFloat, Scalar};
pub use scm::{DecPomdpModel, InterventionSet, ScmError, StepCounter, Trajectory};

/// Exogenous context with `f64` noise.
pub type Context = scm::Context<f64>;
pub type Categorical = scm::Categorical<f64>;
/// Responsibility degree, an exact ratio `m / k`.
pub type Degree = Exact;

pub type Toy = envs::toy::Toy<f64>;
pub type Goofspiel = envs::goofspiel::Goofspiel<f64>;
/// Euchre or Spades, depending on its rules.
pub type TrickGame = envs::trick::TrickGame<f64>;
