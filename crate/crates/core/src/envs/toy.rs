//! A tiny two-agent counter game, small enough to enumerate by hand.
//!
//! The state is a counter `s`, drawn uniformly from `{0, 1}`. Each step both
//! agents pick a number in `0..actions` and the counter grows by their sum.
//! The agents lose when the final counter is below `goal`.
//!
//! Ag0 plays 1 when `s` is even and 0 otherwise. Ag1 plays `min(s, 1)` with
//! probability 0.7 and another number uniformly otherwise. Both observe `s`.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::scalar::ProbFloat;
use crate::scm::{Action, Categorical, DecPomdpModel, Draws, Outcome, ScmError, SlotId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub horizon: usize,
    pub actions: usize,
    pub goal: i64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self { horizon: 2, actions: 2, goal: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ToyInfo {
    pub t: usize,
    pub s: i64,
    pub last: Option<Action>,
}

#[derive(Clone, Debug)]
pub struct Toy<F = f64> {
    config: ToyConfig,
    _f: PhantomData<fn() -> F>,
}

impl<F: ProbFloat> Toy<F> {
    pub fn new(config: ToyConfig) -> Self {
        assert!(config.horizon >= 1 && config.actions >= 2, "invalid toy config");
        Self { config, _f: PhantomData }
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }
}

impl<F: ProbFloat> Default for Toy<F> {
    fn default() -> Self {
        Self::new(ToyConfig::default())
    }
}

impl<F: ProbFloat> DecPomdpModel for Toy<F> {
    type Prob = F;
    type State = i64;
    type Obs = i64;
    type Info = ToyInfo;

    fn num_agents(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn action_domain(&self, _agent: usize) -> usize {
        self.config.actions
    }

    fn initial_state(&self, draws: &mut Draws<'_, F>) -> Result<i64, ScmError> {
        Ok(draws.draw(&Categorical::uniform(2, &[0, 1]))? as i64)
    }

    fn transition(
        &self,
        _t: usize,
        state: &i64,
        actions: &[Option<Action>],
        _draws: &mut Draws<'_, F>,
    ) -> Result<i64, ScmError> {
        Ok(state + actions.iter().flatten().map(|&a| a as i64).sum::<i64>())
    }

    fn observe(&self, _t: usize, state: &i64, _draws: &mut Draws<'_, F>) -> Result<Vec<i64>, ScmError> {
        Ok(vec![*state, *state])
    }

    fn initial_info(&self, _agent: usize, obs: &i64) -> ToyInfo {
        ToyInfo { t: 0, s: *obs, last: None }
    }

    fn info_update(&self, _agent: usize, info: &ToyInfo, own_action: Option<Action>, obs: &i64) -> ToyInfo {
        ToyInfo { t: info.t + 1, s: *obs, last: own_action }
    }

    fn acts(&self, _agent: usize, _info: &ToyInfo) -> bool {
        true
    }

    fn valid_actions(&self, _agent: usize, _info: &ToyInfo) -> Vec<Action> {
        (0..self.config.actions).collect()
    }

    fn policy(&self, agent: usize, info: &ToyInfo) -> Categorical<F> {
        let k = self.config.actions;
        if agent == 0 {
            Categorical::point(k, if info.s % 2 == 0 { 1 } else { 0 })
        } else {
            let all: Vec<usize> = (0..k).collect();
            let target = info.s.clamp(0, 1) as usize;
            Categorical::target_or_uniform_rest(k, target, F::lit(0.7), &all)
        }
    }

    fn outcome(&self, terminal: &i64) -> Outcome {
        Outcome { agents: *terminal, opponents: self.config.goal }
    }

    fn slot_inventory(&self) -> Vec<(SlotId, usize)> {
        let mut out = vec![(SlotId::state(0, 0), 2)];
        for t in 0..self.config.horizon {
            for agent in 0..2 {
                out.push((SlotId::action(agent, t), self.config.actions));
            }
        }
        out
    }
}
