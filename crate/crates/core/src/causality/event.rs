use std::fmt;

use crate::causality::CausalityError;
use crate::scm::{Action, DecPomdpModel, Trajectory};

/// Primitive event `V = v` over an endogenous variable of a trajectory.
pub enum Primitive<M: DecPomdpModel> {
    /// `S_t = value`; `t` may address the terminal state.
    State { t: usize, value: M::State },
    Obs { agent: usize, t: usize, value: M::Obs },
    Info { agent: usize, t: usize, value: M::Info },
    /// `A_{agent,t} = value`, where `None` means the agent did not decide.
    Action { agent: usize, t: usize, value: Option<Action> },
    /// The agents' team ends with a strictly lower score than the opponents.
    AgentsLose,
}

/// Boolean combination of primitive events.
pub enum Event<M: DecPomdpModel> {
    Prim(Primitive<M>),
    Not(Box<Event<M>>),
    And(Vec<Event<M>>),
    Or(Vec<Event<M>>),
}

impl<M: DecPomdpModel> Event<M> {
    pub fn agents_lose() -> Self {
        Event::Prim(Primitive::AgentsLose)
    }

    pub fn action(agent: usize, t: usize, value: Option<Action>) -> Self {
        Event::Prim(Primitive::Action { agent, t, value })
    }

    pub fn not(e: Event<M>) -> Self {
        Event::Not(Box::new(e))
    }

    pub fn and(es: Vec<Event<M>>) -> Self {
        Event::And(es)
    }

    pub fn or(es: Vec<Event<M>>) -> Self {
        Event::Or(es)
    }

    /// Does the event take place on `traj`?
    pub fn evaluate(&self, traj: &Trajectory<M>) -> Result<bool, CausalityError> {
        Ok(match self {
            Event::Prim(p) => p.evaluate(traj)?,
            Event::Not(e) => !e.evaluate(traj)?,
            Event::And(es) => {
                let mut all = true;
                for e in es {
                    all &= e.evaluate(traj)?;
                }
                all
            }
            Event::Or(es) => {
                let mut any = false;
                for e in es {
                    any |= e.evaluate(traj)?;
                }
                any
            }
        })
    }
}

impl<M: DecPomdpModel> Primitive<M> {
    fn evaluate(&self, traj: &Trajectory<M>) -> Result<bool, CausalityError> {
        let shape = |what: &str, agent: Option<usize>, t: usize| {
            CausalityError::OutOfShape(format!(
                "{what} reference agent={agent:?} t={t} on a trajectory of length {}",
                traj.len()
            ))
        };
        Ok(match self {
            Primitive::State { t, value } => {
                traj.state(*t).ok_or_else(|| shape("state", None, *t))? == value
            }
            Primitive::Obs { agent, t, value } => {
                traj.obs(*agent, *t).ok_or_else(|| shape("obs", Some(*agent), *t))? == value
            }
            Primitive::Info { agent, t, value } => {
                traj.info(*agent, *t).ok_or_else(|| shape("info", Some(*agent), *t))? == value
            }
            Primitive::Action { agent, t, value } => {
                let step = traj.step(*t).ok_or_else(|| shape("action", Some(*agent), *t))?;
                let a = step.actions.get(*agent).ok_or_else(|| shape("action", Some(*agent), *t))?;
                a == value
            }
            Primitive::AgentsLose => traj.outcome().agents_lose(),
        })
    }
}

impl<M: DecPomdpModel> fmt::Debug for Event<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Prim(Primitive::AgentsLose) => write!(f, "agents_lose"),
            Event::Prim(Primitive::State { t, .. }) => write!(f, "S_{t}=.."),
            Event::Prim(Primitive::Obs { agent, t, .. }) => write!(f, "O_{agent},{t}=.."),
            Event::Prim(Primitive::Info { agent, t, .. }) => write!(f, "I_{agent},{t}=.."),
            Event::Prim(Primitive::Action { agent, t, value }) => write!(f, "A_{agent},{t}={value:?}"),
            Event::Not(e) => write!(f, "!({e:?})"),
            Event::And(es) => f.debug_tuple("and").field(es).finish(),
            Event::Or(es) => f.debug_tuple("or").field(es).finish(),
        }
    }
}
