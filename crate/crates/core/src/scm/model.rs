use std::fmt::Debug;
use std::hash::Hash;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::causality::Event;
use crate::scalar::{Exact, ProbFloat};
use crate::scm::categorical::Categorical;
use crate::scm::noise::{Draws, SlotId};
use crate::scm::ScmError;

/// Agent actions are indices into the agent's action domain.
pub type Action = usize;

/// Terminal summary of an episode: accumulated score per team.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub agents: i64,
    pub opponents: i64,
}

impl Outcome {
    pub fn agents_lose(&self) -> bool {
        self.agents < self.opponents
    }

    /// How far the agents trail; non-positive when they do not lose.
    pub fn deficit(&self) -> i64 {
        self.opponents - self.agents
    }
}

/// Progress signal for the search: 1 when the counterfactual no longer
/// loses, otherwise the relative reduction of the deficit, floored at 0.
pub fn q_env_margin(factual: &Outcome, counterfactual: &Outcome) -> Exact {
    if !counterfactual.agents_lose() {
        return Ratio::from_integer(1);
    }
    let df = factual.deficit();
    if df <= 0 {
        return Ratio::from_integer(0);
    }
    let gain = df - counterfactual.deficit();
    if gain <= 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(gain.min(df), df)
    }
}

/// A finite-horizon Dec-POMDP with its agents' models, parameterized as a
/// structural causal model.
///
/// Every stochastic choice goes through a [`Draws`] handle so that it is
/// resolved by the exogenous context. Information-state updates are
/// deterministic, and agents that do not decide at a time-step take no action.
pub trait DecPomdpModel: Send + Sync {
    type Prob: ProbFloat;
    type State: Clone + Debug + PartialEq + Serialize + Send + Sync;
    type Obs: Clone + Debug + PartialEq + Serialize + Send + Sync;
    type Info: Clone + Debug + Eq + Hash + Serialize + Send + Sync;

    fn num_agents(&self) -> usize;

    /// Episode length in time-steps.
    fn horizon(&self) -> usize;

    /// Size of the action domain of `agent` (the Gumbel vector length of its
    /// action slots).
    fn action_domain(&self, agent: usize) -> usize;

    fn initial_state(&self, draws: &mut Draws<'_, Self::Prob>) -> Result<Self::State, ScmError>;

    /// Next state given the agents' actions at `t`. `actions[i]` is `None`
    /// exactly when agent `i` does not decide at `t`.
    fn transition(
        &self,
        t: usize,
        state: &Self::State,
        actions: &[Option<Action>],
        draws: &mut Draws<'_, Self::Prob>,
    ) -> Result<Self::State, ScmError>;

    /// Joint observation at `t`, one entry per agent.
    fn observe(
        &self,
        t: usize,
        state: &Self::State,
        draws: &mut Draws<'_, Self::Prob>,
    ) -> Result<Vec<Self::Obs>, ScmError>;

    fn initial_info(&self, agent: usize, obs: &Self::Obs) -> Self::Info;

    fn info_update(
        &self,
        agent: usize,
        info: &Self::Info,
        own_action: Option<Action>,
        obs: &Self::Obs,
    ) -> Self::Info;

    /// Whether `agent` takes a decision in information state `info`.
    fn acts(&self, agent: usize, info: &Self::Info) -> bool;

    /// Nonempty when [`acts`](Self::acts) holds.
    fn valid_actions(&self, agent: usize, info: &Self::Info) -> Vec<Action>;

    fn policy(&self, agent: usize, info: &Self::Info) -> Categorical<Self::Prob>;

    fn outcome(&self, terminal: &Self::State) -> Outcome;

    fn q_env(&self, factual: &Outcome, counterfactual: &Outcome) -> Exact {
        q_env_margin(factual, counterfactual)
    }

    /// Every stochastic slot an episode may touch, with its domain size.
    fn slot_inventory(&self) -> Vec<(SlotId, usize)>;

    /// The failure whose causes are searched for.
    fn outcome_event(&self) -> Event<Self>
    where
        Self: Sized,
    {
        Event::agents_lose()
    }
}
