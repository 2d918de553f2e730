//! Solving the structural equations forward in time.
//!
//! A [`Prefix`] is a counterfactual episode simulated up to time `t`: every
//! step before `t` is final, and the state, observations and information
//! states at `t` are known. Steps are shared between prefixes through `Arc`
//! links, so caching a prefix per search node is cheap.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde_json::json;

use crate::scm::intervention::InterventionSet;
use crate::scm::model::{Action, DecPomdpModel, Outcome};
use crate::scm::noise::{Context, ContextNoise, DrawRecord, Draws, NoiseSource, SlotId, SlotKind};
use crate::scm::ScmError;

/// Environment-step budget shared by one search run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepCounter {
    used: u64,
    limit: u64,
}

impl StepCounter {
    pub fn new(limit: u64) -> Self {
        Self { used: 0, limit }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Charge one simulated step.
    pub fn charge(&mut self) -> Result<(), ScmError> {
        if self.used >= self.limit {
            return Err(ScmError::BudgetExhausted);
        }
        self.used += 1;
        Ok(())
    }
}

/// State, observations and information states at one time-step.
pub struct Frame<M: DecPomdpModel> {
    pub t: usize,
    pub state: M::State,
    /// Empty on the terminal frame.
    pub obs: Vec<M::Obs>,
    /// Empty on the terminal frame.
    pub infos: Vec<M::Info>,
    /// Draws that produced `state` and `obs`.
    pub draws: Vec<DrawRecord>,
}

/// A completed time-step: its frame plus the joint action taken there.
pub struct Step<M: DecPomdpModel> {
    pub frame: Arc<Frame<M>>,
    pub actions: Vec<Option<Action>>,
    pub action_draws: Vec<DrawRecord>,
}

struct Link<M: DecPomdpModel> {
    step: Arc<Step<M>>,
    prev: Option<Arc<Link<M>>>,
}

pub struct Prefix<M: DecPomdpModel> {
    frame: Arc<Frame<M>>,
    history: Option<Arc<Link<M>>>,
}

impl<M: DecPomdpModel> Clone for Prefix<M> {
    fn clone(&self) -> Self {
        Self { frame: Arc::clone(&self.frame), history: self.history.clone() }
    }
}

impl<M: DecPomdpModel> fmt::Debug for Prefix<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Prefix").field("t", &self.frame.t).finish()
    }
}

impl<M: DecPomdpModel> Prefix<M> {
    pub fn t(&self) -> usize {
        self.frame.t
    }

    pub fn frame(&self) -> &Frame<M> {
        &self.frame
    }

    pub fn info(&self, agent: usize) -> &M::Info {
        &self.frame.infos[agent]
    }

    fn steps(&self) -> Vec<Arc<Step<M>>> {
        let mut out = Vec::with_capacity(self.frame.t);
        let mut cur = self.history.as_ref();
        while let Some(link) = cur {
            out.push(Arc::clone(&link.step));
            cur = link.prev.as_ref();
        }
        out.reverse();
        out
    }
}

/// A full episode.
pub struct Trajectory<M: DecPomdpModel> {
    steps: Vec<Arc<Step<M>>>,
    terminal: Arc<Frame<M>>,
    outcome: Outcome,
}

impl<M: DecPomdpModel> Clone for Trajectory<M> {
    fn clone(&self) -> Self {
        Self { steps: self.steps.clone(), terminal: Arc::clone(&self.terminal), outcome: self.outcome }
    }
}

impl<M: DecPomdpModel> fmt::Debug for Trajectory<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("len", &self.steps.len())
            .field("outcome", &self.outcome)
            .finish()
    }
}

impl<M: DecPomdpModel> PartialEq for Trajectory<M> {
    fn eq(&self, other: &Self) -> bool {
        self.steps.len() == other.steps.len()
            && self.outcome == other.outcome
            && self.terminal.state == other.terminal.state
            && self.steps.iter().zip(&other.steps).all(|(a, b)| {
                a.actions == b.actions
                    && a.frame.state == b.frame.state
                    && a.frame.obs == b.frame.obs
                    && a.frame.infos == b.frame.infos
            })
    }
}

impl<M: DecPomdpModel> Trajectory<M> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    pub fn step(&self, t: usize) -> Option<&Step<M>> {
        self.steps.get(t).map(|s| s.as_ref())
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step<M>> {
        self.steps.iter().map(|s| s.as_ref())
    }

    /// State at `t`; `t == len()` addresses the terminal state.
    pub fn state(&self, t: usize) -> Option<&M::State> {
        if t == self.steps.len() {
            Some(&self.terminal.state)
        } else {
            self.steps.get(t).map(|s| &s.frame.state)
        }
    }

    pub fn terminal_state(&self) -> &M::State {
        &self.terminal.state
    }

    pub fn action(&self, agent: usize, t: usize) -> Option<Action> {
        self.steps.get(t).and_then(|s| s.actions.get(agent).copied().flatten())
    }

    pub fn info(&self, agent: usize, t: usize) -> Option<&M::Info> {
        self.steps.get(t).and_then(|s| s.frame.infos.get(agent))
    }

    pub fn obs(&self, agent: usize, t: usize) -> Option<&M::Obs> {
        self.steps.get(t).and_then(|s| s.frame.obs.get(agent))
    }

    /// Every realized draw in causal order.
    pub fn draws(&self) -> Vec<DrawRecord> {
        let mut out = Vec::new();
        for s in &self.steps {
            out.extend_from_slice(&s.frame.draws);
            out.extend_from_slice(&s.action_draws);
        }
        out.extend_from_slice(&self.terminal.draws);
        out
    }

    /// Decision slots `(agent, t)`: where an agent took an action.
    pub fn decision_slots(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (t, s) in self.steps.iter().enumerate() {
            for (i, a) in s.actions.iter().enumerate() {
                if a.is_some() {
                    out.push((i, t));
                }
            }
        }
        out
    }

    /// Prefix at every `t` in `0..len()`, sharing this trajectory's steps.
    pub fn prefixes(&self) -> Vec<Prefix<M>> {
        let mut out = Vec::with_capacity(self.steps.len());
        let mut history: Option<Arc<Link<M>>> = None;
        for s in &self.steps {
            out.push(Prefix { frame: Arc::clone(&s.frame), history: history.clone() });
            history = Some(Arc::new(Link { step: Arc::clone(s), prev: history }));
        }
        out
    }

    /// One JSON object per time-step followed by a trailing outcome object.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (t, s) in self.steps.iter().enumerate() {
            let line = json!({
                "t": t,
                "state": s.frame.state,
                "obs": s.frame.obs,
                "info": s.frame.infos,
                "actions": s.actions,
                "draws": s.frame.draws.iter().chain(&s.action_draws).collect::<Vec<_>>(),
            });
            writeln!(w, "{line}")?;
        }
        let last = json!({
            "outcome": self.outcome,
            "agents_lose": self.outcome.agents_lose(),
            "terminal": self.terminal.state,
            "draws": self.terminal.draws,
        });
        writeln!(w, "{last}")
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

pub(crate) fn initial_prefix<M: DecPomdpModel>(
    model: &M,
    source: &mut dyn NoiseSource<M::Prob>,
) -> Result<Prefix<M>, ScmError> {
    let mut log = Vec::new();
    let state = model.initial_state(&mut Draws::new(source, SlotKind::State, 0, &mut log))?;
    let obs = model.observe(0, &state, &mut Draws::new(source, SlotKind::Obs, 0, &mut log))?;
    let infos = obs.iter().enumerate().map(|(i, o)| model.initial_info(i, o)).collect();
    Ok(Prefix { frame: Arc::new(Frame { t: 0, state, obs, infos, draws: log }), history: None })
}

/// Solve the equations of time-step `prefix.t()` and move to `t + 1`.
pub(crate) fn advance<M: DecPomdpModel>(
    model: &M,
    source: &mut dyn NoiseSource<M::Prob>,
    prefix: &Prefix<M>,
    interventions: &InterventionSet,
    counter: &mut StepCounter,
) -> Result<Prefix<M>, ScmError> {
    let frame = &prefix.frame;
    let t = frame.t;
    if t >= model.horizon() {
        return Err(ScmError::ContractViolation(format!("advance past horizon at t={t}")));
    }
    counter.charge()?;
    let n = model.num_agents();
    let mut actions = Vec::with_capacity(n);
    let mut action_draws = Vec::new();
    for agent in 0..n {
        let info = &frame.infos[agent];
        let forced = interventions.get(agent, t);
        if !model.acts(agent, info) {
            if let Some(a) = forced {
                return Err(ScmError::InvalidIntervention { agent, t, action: a });
            }
            actions.push(None);
            continue;
        }
        let a = match forced {
            Some(a) => {
                if !model.valid_actions(agent, info).contains(&a) {
                    return Err(ScmError::InvalidIntervention { agent, t, action: a });
                }
                a
            }
            None => {
                let slot = SlotId::action(agent, t);
                let a = source.draw(slot, &model.policy(agent, info))?;
                action_draws.push(DrawRecord { slot, outcome: a });
                a
            }
        };
        actions.push(Some(a));
    }

    let mut log = Vec::new();
    let state = model.transition(
        t,
        &frame.state,
        &actions,
        &mut Draws::new(source, SlotKind::State, t + 1, &mut log),
    )?;
    let (obs, infos) = if t + 1 == model.horizon() {
        (Vec::new(), Vec::new())
    } else {
        let obs = model.observe(t + 1, &state, &mut Draws::new(source, SlotKind::Obs, t + 1, &mut log))?;
        let infos = (0..n)
            .map(|i| model.info_update(i, &frame.infos[i], actions[i], &obs[i]))
            .collect();
        (obs, infos)
    };

    let step = Arc::new(Step { frame: Arc::clone(frame), actions, action_draws });
    Ok(Prefix {
        frame: Arc::new(Frame { t: t + 1, state, obs, infos, draws: log }),
        history: Some(Arc::new(Link { step, prev: prefix.history.clone() })),
    })
}

fn finish<M: DecPomdpModel>(model: &M, terminal: Prefix<M>) -> Trajectory<M> {
    let outcome = model.outcome(&terminal.frame.state);
    let steps = terminal.steps();
    Trajectory { steps, terminal: terminal.frame, outcome }
}

pub(crate) fn rollout_with<M: DecPomdpModel>(
    model: &M,
    source: &mut dyn NoiseSource<M::Prob>,
    interventions: &InterventionSet,
    counter: &mut StepCounter,
) -> Result<Trajectory<M>, ScmError> {
    let mut p = initial_prefix(model, source)?;
    while p.t() < model.horizon() {
        p = advance(model, source, &p, interventions, counter)?;
    }
    Ok(finish(model, p))
}

/// A model paired with a context: a causal setting.
pub struct Simulator<'a, M: DecPomdpModel> {
    model: &'a M,
    context: &'a Context<M::Prob>,
}

impl<'a, M: DecPomdpModel> Simulator<'a, M> {
    pub fn new(model: &'a M, context: &'a Context<M::Prob>) -> Self {
        Self { model, context }
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn context(&self) -> &'a Context<M::Prob> {
        self.context
    }

    fn noise(&self) -> ContextNoise<'a, M::Prob> {
        ContextNoise { context: self.context }
    }

    pub fn initial(&self) -> Result<Prefix<M>, ScmError> {
        initial_prefix(self.model, &mut self.noise())
    }

    pub fn step(
        &self,
        prefix: &Prefix<M>,
        interventions: &InterventionSet,
        counter: &mut StepCounter,
    ) -> Result<Prefix<M>, ScmError> {
        advance(self.model, &mut self.noise(), prefix, interventions, counter)
    }

    /// Extend `prefix` to time `target`, charging `target - prefix.t()` steps.
    pub fn extend_to(
        &self,
        prefix: &Prefix<M>,
        target: usize,
        interventions: &InterventionSet,
        counter: &mut StepCounter,
    ) -> Result<Prefix<M>, ScmError> {
        if target > self.model.horizon() || target < prefix.t() {
            return Err(ScmError::ContractViolation(format!(
                "cannot extend prefix at t={} to t={target}",
                prefix.t()
            )));
        }
        let mut noise = self.noise();
        let mut p = prefix.clone();
        while p.t() < target {
            p = advance(self.model, &mut noise, &p, interventions, counter)?;
        }
        Ok(p)
    }

    /// Finish the episode from `prefix`.
    pub fn complete(
        &self,
        prefix: &Prefix<M>,
        interventions: &InterventionSet,
        counter: &mut StepCounter,
    ) -> Result<Trajectory<M>, ScmError> {
        let end = self.extend_to(prefix, self.model.horizon(), interventions, counter)?;
        Ok(finish(self.model, end))
    }

    /// Finish the episode and also return the prefix at every time-step from
    /// `prefix.t()` up to the horizon (exclusive).
    pub fn complete_with_prefixes(
        &self,
        prefix: &Prefix<M>,
        interventions: &InterventionSet,
        counter: &mut StepCounter,
    ) -> Result<(Trajectory<M>, Vec<Prefix<M>>), ScmError> {
        let mut noise = self.noise();
        let mut prefixes = vec![prefix.clone()];
        let mut p = prefix.clone();
        while p.t() < self.model.horizon() {
            p = advance(self.model, &mut noise, &p, interventions, counter)?;
            if p.t() < self.model.horizon() {
                prefixes.push(p.clone());
            }
        }
        Ok((finish(self.model, p), prefixes))
    }

    pub fn rollout(
        &self,
        interventions: &InterventionSet,
        counter: &mut StepCounter,
    ) -> Result<Trajectory<M>, ScmError> {
        rollout_with(self.model, &mut self.noise(), interventions, counter)
    }

    /// The factual episode, not charged to any budget.
    pub fn factual(&self) -> Result<Trajectory<M>, ScmError> {
        self.rollout(&InterventionSet::new(), &mut StepCounter::unlimited())
    }

    /// Action `agent` takes at `prefix.t()` absent an intervention there;
    /// `None` when it does not decide.
    pub fn default_action(&self, prefix: &Prefix<M>, agent: usize) -> Result<Option<Action>, ScmError> {
        let info = prefix.info(agent);
        if !self.model.acts(agent, info) {
            return Ok(None);
        }
        let slot = SlotId::action(agent, prefix.t());
        self.noise().draw(slot, &self.model.policy(agent, info)).map(Some)
    }
}

/// Action of `agent` at `t` in the intervened model, found by rolling the
/// counterfactual forward to `t`.
pub fn default_action<M: DecPomdpModel>(
    model: &M,
    context: &Context<M::Prob>,
    interventions: &InterventionSet,
    agent: usize,
    t: usize,
    counter: &mut StepCounter,
) -> Result<Option<Action>, ScmError> {
    if t >= model.horizon() {
        return Err(ScmError::ContractViolation(format!("t={t} beyond horizon")));
    }
    let sim = Simulator::new(model, context);
    let p = sim.extend_to(&sim.initial()?, t, interventions, counter)?;
    sim.default_action(&p, agent)
}

/// Roll out the (counterfactual) episode of `model` under `context` and
/// `interventions`.
pub fn rollout<M: DecPomdpModel>(
    model: &M,
    context: &Context<M::Prob>,
    interventions: &InterventionSet,
    counter: &mut StepCounter,
) -> Result<Trajectory<M>, ScmError> {
    Simulator::new(model, context).rollout(interventions, counter)
}
