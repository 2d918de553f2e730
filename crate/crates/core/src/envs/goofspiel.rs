//! Team Goofspiel.
//!
//! Four players hold the values `1..=H`. Each round a prize is revealed
//! from a shuffled prize deck and all players discard one card at once; the
//! team with the larger sum of discards collects the prize. Seats 0 and 2 are
//! Ag0 and Ag1, seats 1 and 3 the opponents.
//!
//! Card value `v` is action index `v - 1`.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::scalar::ProbFloat;
use crate::scm::{Action, Categorical, DecPomdpModel, Draws, Outcome, ScmError, SlotId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Nobody collects a tied prize.
    #[default]
    Discard,
    /// A tied prize is added to the next round's prize.
    CarryOver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoofspielConfig {
    pub hand_size: usize,
    pub tie_rule: TieRule,
    /// When false the opponents always play their greedy card.
    pub stochastic_opponents: bool,
}

impl GoofspielConfig {
    pub fn new(hand_size: usize) -> Self {
        Self { hand_size, tie_rule: TieRule::Discard, stochastic_opponents: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoofState {
    /// Prize order, revealed one per round.
    pub prizes: Vec<u8>,
    pub round: usize,
    pub hands: [Vec<u8>; 4],
    /// Collected prizes per team.
    pub scores: [i64; 2],
    pub carry: i64,
}

impl GoofState {
    pub fn prize(&self) -> Option<u8> {
        self.prizes.get(self.round).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GoofView {
    pub hand: Vec<u8>,
    pub prize: u8,
    pub scores: [i64; 2],
}

pub struct Goofspiel<F = f64> {
    config: GoofspielConfig,
    _f: PhantomData<fn() -> F>,
}

impl<F> Clone for Goofspiel<F> {
    fn clone(&self) -> Self {
        Self { config: self.config, _f: PhantomData }
    }
}

impl<F> std::fmt::Debug for Goofspiel<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Goofspiel").field("config", &self.config).finish()
    }
}

pub fn goofspiel_model<F: ProbFloat>(config: GoofspielConfig) -> Result<Goofspiel<F>, ScmError> {
    Goofspiel::new(config)
}

/// Ag0: the prize card if held, else lowest when its team leads or ties and
/// highest when behind.
pub fn ag0_card(view: &GoofView) -> u8 {
    if view.hand.contains(&view.prize) {
        return view.prize;
    }
    if view.scores[0] >= view.scores[1] {
        *view.hand.iter().min().expect("nonempty hand")
    } else {
        *view.hand.iter().max().expect("nonempty hand")
    }
}

/// Ag1: highest card when the prize is at least the hand's mean, else lowest.
pub fn ag1_card(view: &GoofView) -> u8 {
    let sum: u32 = view.hand.iter().map(|&v| v as u32).sum();
    // prize >= sum / len without rounding
    if view.prize as u32 * view.hand.len() as u32 >= sum {
        *view.hand.iter().max().expect("nonempty hand")
    } else {
        *view.hand.iter().min().expect("nonempty hand")
    }
}

/// The opponents' greedy card: highest unless their team leads.
pub fn opponent_target(hand: &[u8], scores: [i64; 2]) -> u8 {
    if scores[1] <= scores[0] {
        *hand.iter().max().expect("nonempty hand")
    } else {
        *hand.iter().min().expect("nonempty hand")
    }
}

impl<F: ProbFloat> Goofspiel<F> {
    pub fn new(config: GoofspielConfig) -> Result<Self, ScmError> {
        if config.hand_size < 2 || config.hand_size > 64 {
            return Err(ScmError::ContractViolation(format!(
                "goofspiel hand size {} out of range",
                config.hand_size
            )));
        }
        Ok(Self { config, _f: PhantomData })
    }

    pub fn config(&self) -> &GoofspielConfig {
        &self.config
    }

    pub fn view(&self, state: &GoofState, seat: usize) -> GoofView {
        GoofView { hand: state.hands[seat].clone(), prize: state.prize().unwrap_or(0), scores: state.scores }
    }

    pub fn opponent_policy(&self, state: &GoofState, seat: usize) -> Categorical<F> {
        let h = self.config.hand_size;
        let hand = &state.hands[seat];
        let target = opponent_target(hand, state.scores) as usize - 1;
        if !self.config.stochastic_opponents {
            return Categorical::point(h, target);
        }
        let support: Vec<usize> = hand.iter().map(|&v| v as usize - 1).collect();
        Categorical::target_plus_uniform(h, target, F::lit(0.8), &support)
    }

    /// Resolve one round given the four discards, indexed by seat.
    pub fn resolve(&self, state: &GoofState, plays: [u8; 4]) -> Result<GoofState, ScmError> {
        let prize = state.prize().ok_or_else(|| ScmError::ContractViolation("no prize left".into()))?;
        let mut next = state.clone();
        for (seat, &v) in plays.iter().enumerate() {
            let pos = next.hands[seat].iter().position(|&c| c == v).ok_or_else(|| {
                ScmError::ContractViolation(format!("seat {seat} does not hold {v}"))
            })?;
            next.hands[seat].remove(pos);
        }
        let agents = plays[0] as i64 + plays[2] as i64;
        let opponents = plays[1] as i64 + plays[3] as i64;
        let pot = prize as i64 + state.carry;
        next.carry = 0;
        if agents > opponents {
            next.scores[0] += pot;
        } else if opponents > agents {
            next.scores[1] += pot;
        } else if self.config.tie_rule == TieRule::CarryOver {
            next.carry = pot;
        }
        next.round += 1;
        Ok(next)
    }
}

impl<F: ProbFloat> DecPomdpModel for Goofspiel<F> {
    type Prob = F;
    type State = GoofState;
    type Obs = GoofView;
    type Info = GoofView;

    fn num_agents(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.config.hand_size
    }

    fn action_domain(&self, _agent: usize) -> usize {
        self.config.hand_size
    }

    fn initial_state(&self, draws: &mut Draws<'_, F>) -> Result<GoofState, ScmError> {
        let h = self.config.hand_size;
        let mut deck: Vec<usize> = (0..h).collect();
        let mut prizes = Vec::with_capacity(h);
        for _ in 0..h {
            let j = draws.draw(&Categorical::uniform(h, &deck))?;
            deck.retain(|&c| c != j);
            prizes.push(j as u8 + 1);
        }
        let hand: Vec<u8> = (1..=h as u8).collect();
        Ok(GoofState {
            prizes,
            round: 0,
            hands: [hand.clone(), hand.clone(), hand.clone(), hand],
            scores: [0, 0],
            carry: 0,
        })
    }

    fn transition(
        &self,
        _t: usize,
        state: &GoofState,
        actions: &[Option<Action>],
        draws: &mut Draws<'_, F>,
    ) -> Result<GoofState, ScmError> {
        let agent = |i: usize| -> Result<u8, ScmError> {
            actions[i]
                .map(|a| a as u8 + 1)
                .ok_or_else(|| ScmError::ContractViolation(format!("agent {i} took no action")))
        };
        let o1 = draws.draw(&self.opponent_policy(state, 1))? as u8 + 1;
        let o3 = draws.draw(&self.opponent_policy(state, 3))? as u8 + 1;
        self.resolve(state, [agent(0)?, o1, agent(1)?, o3])
    }

    fn observe(&self, _t: usize, state: &GoofState, _draws: &mut Draws<'_, F>) -> Result<Vec<GoofView>, ScmError> {
        Ok(vec![self.view(state, 0), self.view(state, 2)])
    }

    fn initial_info(&self, _agent: usize, obs: &GoofView) -> GoofView {
        obs.clone()
    }

    fn info_update(&self, _agent: usize, _info: &GoofView, _own: Option<Action>, obs: &GoofView) -> GoofView {
        obs.clone()
    }

    fn acts(&self, _agent: usize, info: &GoofView) -> bool {
        !info.hand.is_empty()
    }

    fn valid_actions(&self, _agent: usize, info: &GoofView) -> Vec<Action> {
        info.hand.iter().map(|&v| v as usize - 1).collect()
    }

    fn policy(&self, agent: usize, info: &GoofView) -> Categorical<F> {
        let v = if agent == 0 { ag0_card(info) } else { ag1_card(info) };
        Categorical::point(self.config.hand_size, v as usize - 1)
    }

    fn outcome(&self, terminal: &GoofState) -> Outcome {
        Outcome { agents: terminal.scores[0], opponents: terminal.scores[1] }
    }

    fn slot_inventory(&self) -> Vec<(SlotId, usize)> {
        let h = self.config.hand_size;
        let mut out: Vec<(SlotId, usize)> = (0..h).map(|k| (SlotId::state(0, k), h)).collect();
        for t in 0..h {
            out.push((SlotId::action(0, t), h));
            out.push((SlotId::action(1, t), h));
            out.push((SlotId::state(t + 1, 0), h));
            out.push((SlotId::state(t + 1, 1), h));
        }
        out
    }
}
