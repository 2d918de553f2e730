//! Lower-bound instances by policy poisoning.
//!
//! A few decisions of each agent are poisoned: the agent's usual choice gets
//! probability zero and the other valid actions share the mass uniformly.
//! Failures produced that way have known causes among the poisoned slots.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::harness::{derive_seed, HarnessError};
use crate::scm::{
    Action, Categorical, Context, DecPomdpModel, Draws, Outcome, ScmError, SlotId, SlotKey, Simulator, Trajectory,
};

pub const POISONED_PER_AGENT: usize = 5;
const POISON: u64 = 4;

/// Information state of a poisoned agent: the inner one plus the number of
/// decisions taken so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PoisonInfo<I> {
    pub decisions: usize,
    pub inner: I,
}

/// `inner` with the agents' `k`-th decisions poisoned for every `k` in
/// `poisoned[agent]`.
#[derive(Clone, Debug)]
pub struct Poisoned<M> {
    pub inner: M,
    pub poisoned: Vec<BTreeSet<usize>>,
}

impl<M: DecPomdpModel> Poisoned<M> {
    pub fn new(inner: M, poisoned: Vec<BTreeSet<usize>>) -> Self {
        Self { inner, poisoned }
    }

    fn is_poisoned(&self, agent: usize, info: &PoisonInfo<M::Info>) -> bool {
        self.poisoned.get(agent).is_some_and(|s| s.contains(&info.decisions))
    }
}

/// The usual choice of a policy: its point mass, else its most likely action.
fn usual_choice<F: crate::ProbFloat>(dist: &Categorical<F>) -> usize {
    dist.point_mass().unwrap_or_else(|| {
        let mut best = 0;
        for j in dist.support() {
            if dist.prob(j) > dist.prob(best) {
                best = j;
            }
        }
        best
    })
}

impl<M: DecPomdpModel> DecPomdpModel for Poisoned<M> {
    type Prob = M::Prob;
    type State = M::State;
    type Obs = M::Obs;
    type Info = PoisonInfo<M::Info>;

    fn num_agents(&self) -> usize {
        self.inner.num_agents()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn action_domain(&self, agent: usize) -> usize {
        self.inner.action_domain(agent)
    }

    fn initial_state(&self, draws: &mut Draws<'_, M::Prob>) -> Result<M::State, ScmError> {
        self.inner.initial_state(draws)
    }

    fn transition(
        &self,
        t: usize,
        state: &M::State,
        actions: &[Option<Action>],
        draws: &mut Draws<'_, M::Prob>,
    ) -> Result<M::State, ScmError> {
        self.inner.transition(t, state, actions, draws)
    }

    fn observe(&self, t: usize, state: &M::State, draws: &mut Draws<'_, M::Prob>) -> Result<Vec<M::Obs>, ScmError> {
        self.inner.observe(t, state, draws)
    }

    fn initial_info(&self, agent: usize, obs: &M::Obs) -> Self::Info {
        PoisonInfo { decisions: 0, inner: self.inner.initial_info(agent, obs) }
    }

    fn info_update(&self, agent: usize, info: &Self::Info, own_action: Option<Action>, obs: &M::Obs) -> Self::Info {
        PoisonInfo {
            decisions: info.decisions + usize::from(own_action.is_some()),
            inner: self.inner.info_update(agent, &info.inner, own_action, obs),
        }
    }

    fn acts(&self, agent: usize, info: &Self::Info) -> bool {
        self.inner.acts(agent, &info.inner)
    }

    fn valid_actions(&self, agent: usize, info: &Self::Info) -> Vec<Action> {
        self.inner.valid_actions(agent, &info.inner)
    }

    fn policy(&self, agent: usize, info: &Self::Info) -> Categorical<M::Prob> {
        let dist = self.inner.policy(agent, &info.inner);
        if !self.is_poisoned(agent, info) {
            return dist;
        }
        let usual = usual_choice(&dist);
        let rest: Vec<Action> =
            self.inner.valid_actions(agent, &info.inner).into_iter().filter(|&a| a != usual).collect();
        if rest.is_empty() {
            dist
        } else {
            Categorical::uniform(self.inner.action_domain(agent), &rest)
        }
    }

    fn outcome(&self, terminal: &M::State) -> Outcome {
        self.inner.outcome(terminal)
    }

    fn slot_inventory(&self) -> Vec<(SlotId, usize)> {
        self.inner.slot_inventory()
    }
}

/// A losing episode of the poisoned model whose unpoisoned replay wins.
pub struct PoisonedInstance<M: DecPomdpModel> {
    pub model: Poisoned<M>,
    pub context: Context<M::Prob>,
    pub trajectory: Trajectory<Poisoned<M>>,
    /// Keys of the poisoned decisions in `trajectory`.
    pub slots: BTreeSet<SlotKey>,
    pub attempts: u64,
}

/// Poison [`POISONED_PER_AGENT`] uniformly chosen decisions of every agent,
/// then sample contexts until the unpoisoned agents win and the poisoned
/// ones lose under the same context.
pub fn poison_and_generate<M: DecPomdpModel + Clone>(
    model: &M,
    seed: u64,
    max_attempts: u64,
) -> Result<PoisonedInstance<M>, HarnessError> {
    let probe = Simulator::new(model, &Context::from_seed(seed)).factual()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[POISON]));
    let poisoned: Vec<BTreeSet<usize>> = (0..model.num_agents())
        .map(|i| {
            let decisions = probe.decision_slots().iter().filter(|&&(a, _)| a == i).count();
            index::sample(&mut rng, decisions, POISONED_PER_AGENT.min(decisions)).into_iter().collect()
        })
        .collect();
    let pmodel = Poisoned::new(model.clone(), poisoned);
    for attempt in 0..max_attempts {
        let context = Context::from_seed(derive_seed(seed, &[POISON, attempt]));
        let clean = Simulator::new(model, &context).factual()?;
        if clean.outcome().agents <= clean.outcome().opponents {
            continue;
        }
        let trajectory = Simulator::new(&pmodel, &context).factual()?;
        if !trajectory.outcome().agents_lose() {
            continue;
        }
        let slots = trajectory
            .decision_slots()
            .into_iter()
            .filter(|&(a, t)| {
                let info = trajectory.info(a, t).expect("decision slot info");
                pmodel.is_poisoned(a, info)
            })
            .map(|(a, t)| SlotKey::new(a, t))
            .collect();
        return Ok(PoisonedInstance { model: pmodel, context, trajectory, slots, attempts: attempt + 1 });
    }
    Err(HarnessError::GenerationExhausted { wanted: 1, found: 0, attempts: max_attempts })
}
