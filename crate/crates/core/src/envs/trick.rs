//! Four-player trick-taking games: Euchre and Spades.
//!
//! Seats run clockwise 0..4. Seats 0 and 2 are the agents Ag0 and Ag1, seats
//! 1 and 3 their opponents; a seat's team is `seat % 2`. Each time-step one
//! card is played, so an episode has `4 * H` steps. Opponents belong to the
//! environment: their cards are state draws of the transition.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::envs::cards::{Card, Suit, ACE, JACK, KING, QUEEN};
use crate::scalar::ProbFloat;
use crate::scm::{Action, Categorical, DecPomdpModel, Draws, Outcome, ScmError, SlotId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rules {
    /// Random trump and first leader. `bowers` ranks the trump jack and the
    /// same-colour jack on top of the trump suit.
    Euchre { bowers: bool },
    /// Spade trump, bidding, no spade lead before spades are broken.
    Spades,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrickConfig {
    pub hand_size: usize,
    pub rules: Rules,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrickState {
    pub hands: [Vec<Card>; 4],
    pub trump: Suit,
    pub leader: u8,
    pub trick: Vec<(u8, Card)>,
    pub tricks_won: [u8; 2],
    /// Per-seat bids; empty in Euchre.
    pub bids: Vec<u8>,
    pub broken: bool,
}

impl TrickState {
    pub fn to_play(&self) -> u8 {
        (self.leader + self.trick.len() as u8) % 4
    }
}

/// What a seat sees; also its information state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TrickView {
    pub seat: u8,
    pub hand: Vec<Card>,
    pub trump: Suit,
    pub lead: Option<Suit>,
    pub trick: Vec<(u8, Card)>,
    pub to_play: u8,
    /// Spades only.
    pub bids: Vec<u8>,
    /// Spades only.
    pub tricks_won: [u8; 2],
    /// Spades only.
    pub broken: bool,
}

pub struct TrickGame<F = f64> {
    config: TrickConfig,
    _f: PhantomData<fn() -> F>,
}

impl<F> Clone for TrickGame<F> {
    fn clone(&self) -> Self {
        Self { config: self.config, _f: PhantomData }
    }
}

impl<F> std::fmt::Debug for TrickGame<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrickGame").field("config", &self.config).finish()
    }
}

pub fn euchre_model<F: ProbFloat>(hand_size: usize) -> Result<TrickGame<F>, ScmError> {
    TrickGame::new(TrickConfig { hand_size, rules: Rules::Euchre { bowers: false } })
}

pub fn spades_model<F: ProbFloat>(hand_size: usize) -> Result<TrickGame<F>, ScmError> {
    TrickGame::new(TrickConfig { hand_size, rules: Rules::Spades })
}

/// Spades bid of one hand: kings and aces, the jack and queen of spades, and
/// `3 / H` per lower spade, rounded half up and capped at `H`.
pub fn spades_bid(hand: &[Card], hand_size: usize) -> u8 {
    let h = hand_size as i64;
    let mut base = 0i64;
    let mut low = 0i64;
    for c in hand {
        if c.rank() == KING || c.rank() == ACE {
            base += 1;
        }
        if c.suit() == Suit::Spades {
            match c.rank() {
                JACK | QUEEN => base += 1,
                r if r < JACK => low += 1,
                _ => {}
            }
        }
    }
    // round((base * h + 3 * low) / h), halves up
    let bid = (2 * (base * h + 3 * low) + h).div_euclid(2 * h);
    bid.clamp(0, h) as u8
}

/// Team score in Spades.
pub fn spades_score(bid: i64, tricks: i64) -> i64 {
    if tricks >= bid {
        let bags = tricks - bid;
        let penalty = if bags >= 10 { 100 } else { 0 };
        10 * bid + bags - penalty
    } else {
        -10 * bid
    }
}

/// A seat's view of the table, enough to rank and validate cards.
struct Table<'a> {
    rules: Rules,
    trump: Suit,
    hand: &'a [Card],
    trick: &'a [(u8, Card)],
    broken: bool,
    seat: u8,
}

impl Table<'_> {
    fn bowers(&self) -> bool {
        matches!(self.rules, Rules::Euchre { bowers: true })
    }

    fn suit_of(&self, c: Card) -> Suit {
        if self.bowers() && c.rank() == JACK && c.suit() == self.trump.partner() {
            self.trump
        } else {
            c.suit()
        }
    }

    fn lead(&self) -> Option<Suit> {
        self.trick.first().map(|&(_, c)| self.suit_of(c))
    }

    fn rank_of(&self, c: Card) -> u8 {
        if self.bowers() && c.rank() == JACK {
            if c.suit() == self.trump {
                return 16;
            }
            if c.suit() == self.trump.partner() {
                return 15;
            }
        }
        c.rank()
    }

    /// Ranking key: trump beats the lead suit, which beats the rest.
    fn strength(&self, c: Card) -> (u8, u8, u8) {
        let s = self.suit_of(c);
        let class = if s == self.trump {
            2
        } else if Some(s) == self.lead() {
            1
        } else {
            0
        };
        (class, self.rank_of(c), c.suit() as u8)
    }

    fn valid(&self) -> Vec<Card> {
        match self.lead() {
            Some(lead) => {
                let follow: Vec<Card> = self.hand.iter().copied().filter(|&c| self.suit_of(c) == lead).collect();
                if follow.is_empty() {
                    self.hand.to_vec()
                } else {
                    follow
                }
            }
            None => {
                if self.rules == Rules::Spades && !self.broken {
                    let rest: Vec<Card> =
                        self.hand.iter().copied().filter(|&c| c.suit() != Suit::Spades).collect();
                    if !rest.is_empty() {
                        return rest;
                    }
                }
                self.hand.to_vec()
            }
        }
    }

    fn current_winner(&self) -> Option<(u8, Card)> {
        self.trick.iter().copied().max_by_key(|&(_, c)| self.strength(c))
    }

    fn teammate_leading(&self) -> bool {
        self.current_winner().is_some_and(|(s, _)| s == (self.seat + 2) % 4)
    }

    fn winning(&self, valid: &[Card]) -> Vec<Card> {
        match self.current_winner() {
            Some((_, best)) => {
                let b = self.strength(best);
                valid.iter().copied().filter(|&c| self.strength(c) > b).collect()
            }
            None => Vec::new(),
        }
    }

    fn lowest(&self, cards: &[Card]) -> Card {
        *cards.iter().min_by_key(|&&c| self.strength(c)).expect("nonempty")
    }

    fn highest(&self, cards: &[Card]) -> Card {
        *cards.iter().max_by_key(|&&c| self.strength(c)).expect("nonempty")
    }

    /// Deterministic agent rule; `aggressive` selects Ag0's variant.
    fn agent_card(&self, aggressive: bool) -> Card {
        let valid = self.valid();
        match self.trick.len() {
            0 => {
                if aggressive {
                    self.lowest(&valid)
                } else {
                    let plain: Vec<Card> = valid.iter().copied().filter(|&c| self.suit_of(c) != self.trump).collect();
                    self.highest(if plain.is_empty() { &valid } else { &plain })
                }
            }
            1 | 2 => {
                let win = self.winning(&valid);
                if self.teammate_leading() || win.is_empty() {
                    self.lowest(&valid)
                } else if aggressive {
                    self.lowest(&win)
                } else {
                    self.highest(&win)
                }
            }
            _ => {
                let win = self.winning(&valid);
                if win.is_empty() {
                    self.lowest(&valid)
                } else {
                    self.lowest(&win)
                }
            }
        }
    }

    fn opponent_policy<F: ProbFloat>(&self) -> Categorical<F> {
        let valid = self.valid();
        let support: Vec<usize> = valid.iter().map(|c| c.index()).collect();
        if self.trick.is_empty() {
            return Categorical::uniform(Card::DECK, &support);
        }
        let win = self.winning(&valid);
        let last = self.trick.len() == 3;
        let target = if win.is_empty() || (last && self.teammate_leading()) {
            self.lowest(&valid)
        } else {
            self.lowest(&win)
        };
        Categorical::target_or_uniform_rest(Card::DECK, target.index(), F::lit(0.8), &support)
    }
}

impl<F: ProbFloat> TrickGame<F> {
    pub fn new(config: TrickConfig) -> Result<Self, ScmError> {
        if config.hand_size == 0 || 4 * config.hand_size > Card::DECK {
            return Err(ScmError::ContractViolation(format!(
                "hand size {} does not fit a 52-card deck",
                config.hand_size
            )));
        }
        Ok(Self { config, _f: PhantomData })
    }

    pub fn config(&self) -> &TrickConfig {
        &self.config
    }

    pub fn hand_size(&self) -> usize {
        self.config.hand_size
    }

    fn table<'a>(&self, state: &'a TrickState, seat: u8) -> Table<'a> {
        Table {
            rules: self.config.rules,
            trump: state.trump,
            hand: &state.hands[seat as usize],
            trick: &state.trick,
            broken: state.broken,
            seat,
        }
    }

    fn view_table<'a>(&self, view: &'a TrickView) -> Table<'a> {
        Table {
            rules: self.config.rules,
            trump: view.trump,
            hand: &view.hand,
            trick: &view.trick,
            broken: view.broken,
            seat: view.seat,
        }
    }

    pub fn view(&self, state: &TrickState, seat: u8) -> TrickView {
        let spades = self.config.rules == Rules::Spades;
        TrickView {
            seat,
            hand: state.hands[seat as usize].clone(),
            trump: state.trump,
            lead: self.table(state, seat).lead(),
            trick: state.trick.clone(),
            to_play: state.to_play(),
            bids: state.bids.clone(),
            tricks_won: if spades { state.tricks_won } else { [0, 0] },
            broken: spades && state.broken,
        }
    }

    /// Valid cards for `seat` in `state`.
    pub fn valid_cards(&self, state: &TrickState, seat: u8) -> Vec<Card> {
        self.table(state, seat).valid()
    }

    /// The card the agent at `seat` (0 or 2) plays.
    pub fn agent_card(&self, state: &TrickState, seat: u8) -> Card {
        self.table(state, seat).agent_card(seat == 0)
    }

    pub fn opponent_policy(&self, state: &TrickState, seat: u8) -> Categorical<F> {
        self.table(state, seat).opponent_policy()
    }

    /// Play `card` from the seat to move, resolving the trick when complete.
    pub fn play(&self, state: &TrickState, card: Card) -> Result<TrickState, ScmError> {
        let seat = state.to_play();
        let table = self.table(state, seat);
        if !table.valid().contains(&card) {
            return Err(ScmError::ContractViolation(format!("seat {seat} cannot play {card}")));
        }
        let lead = table.lead();
        let mut next = state.clone();
        next.hands[seat as usize].retain(|&c| c != card);
        if card.suit() == Suit::Spades && lead != Some(Suit::Spades) {
            next.broken = true;
        }
        next.trick.push((seat, card));
        if next.trick.len() == 4 {
            let (winner, _) = self.table(&next, seat).current_winner().expect("full trick");
            next.tricks_won[winner as usize % 2] += 1;
            next.leader = winner;
            next.trick.clear();
        }
        Ok(next)
    }

    /// Final scores per team.
    pub fn scores(&self, state: &TrickState) -> Outcome {
        match self.config.rules {
            Rules::Euchre { .. } => Outcome {
                agents: state.tricks_won[0] as i64,
                opponents: state.tricks_won[1] as i64,
            },
            Rules::Spades => {
                let team = |k: usize| {
                    let bid = (state.bids[k] + state.bids[k + 2]) as i64;
                    spades_score(bid, state.tricks_won[k] as i64)
                };
                Outcome { agents: team(0), opponents: team(1) }
            }
        }
    }

    /// Deal fixed hands; used to set up positions by hand.
    pub fn state_from_hands(&self, hands: [Vec<Card>; 4], trump: Suit, leader: u8) -> TrickState {
        let mut hands = hands;
        for h in hands.iter_mut() {
            h.sort();
        }
        let bids = match self.config.rules {
            Rules::Spades => hands.iter().map(|h| spades_bid(h, self.config.hand_size)).collect(),
            Rules::Euchre { .. } => Vec::new(),
        };
        TrickState { hands, trump, leader, trick: Vec::new(), tricks_won: [0, 0], bids, broken: false }
    }
}

impl<F: ProbFloat> DecPomdpModel for TrickGame<F> {
    type Prob = F;
    type State = TrickState;
    type Obs = TrickView;
    type Info = TrickView;

    fn num_agents(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        4 * self.config.hand_size
    }

    fn action_domain(&self, _agent: usize) -> usize {
        Card::DECK
    }

    fn initial_state(&self, draws: &mut Draws<'_, F>) -> Result<TrickState, ScmError> {
        let h = self.config.hand_size;
        let mut deck: Vec<usize> = (0..Card::DECK).collect();
        let mut hands: [Vec<Card>; 4] = Default::default();
        for k in 0..4 * h {
            let j = draws.draw(&Categorical::uniform(Card::DECK, &deck))?;
            deck.retain(|&c| c != j);
            hands[k % 4].push(Card::from_index(j));
        }
        let trump = match self.config.rules {
            Rules::Euchre { .. } => Suit::from_index(draws.draw(&Categorical::uniform(4, &[0, 1, 2, 3]))?),
            Rules::Spades => Suit::Spades,
        };
        let leader = draws.draw(&Categorical::uniform(4, &[0, 1, 2, 3]))? as u8;
        Ok(self.state_from_hands(hands, trump, leader))
    }

    fn transition(
        &self,
        _t: usize,
        state: &TrickState,
        actions: &[Option<Action>],
        draws: &mut Draws<'_, F>,
    ) -> Result<TrickState, ScmError> {
        let seat = state.to_play();
        let card = if seat % 2 == 0 {
            let a = actions[seat as usize / 2].ok_or_else(|| {
                ScmError::ContractViolation(format!("agent at seat {seat} is to play but took no action"))
            })?;
            Card::from_index(a)
        } else {
            Card::from_index(draws.draw(&self.opponent_policy(state, seat))?)
        };
        self.play(state, card)
    }

    fn observe(&self, _t: usize, state: &TrickState, _draws: &mut Draws<'_, F>) -> Result<Vec<TrickView>, ScmError> {
        Ok(vec![self.view(state, 0), self.view(state, 2)])
    }

    fn initial_info(&self, _agent: usize, obs: &TrickView) -> TrickView {
        obs.clone()
    }

    fn info_update(&self, _agent: usize, _info: &TrickView, _own: Option<Action>, obs: &TrickView) -> TrickView {
        obs.clone()
    }

    fn acts(&self, _agent: usize, info: &TrickView) -> bool {
        info.to_play == info.seat
    }

    fn valid_actions(&self, agent: usize, info: &TrickView) -> Vec<Action> {
        if !self.acts(agent, info) {
            return Vec::new();
        }
        self.view_table(info).valid().iter().map(|c| c.index()).collect()
    }

    fn policy(&self, _agent: usize, info: &TrickView) -> Categorical<F> {
        let card = self.view_table(info).agent_card(info.seat == 0);
        Categorical::point(Card::DECK, card.index())
    }

    fn outcome(&self, terminal: &TrickState) -> Outcome {
        self.scores(terminal)
    }

    fn slot_inventory(&self) -> Vec<(SlotId, usize)> {
        let h = self.config.hand_size;
        let mut out: Vec<(SlotId, usize)> = (0..4 * h).map(|k| (SlotId::state(0, k), Card::DECK)).collect();
        if matches!(self.config.rules, Rules::Euchre { .. }) {
            out.push((SlotId::state(0, 4 * h), 4));
        }
        out.push((SlotId::state(0, out.len()), 4));
        for t in 0..self.horizon() {
            out.push((SlotId::action(0, t), Card::DECK));
            out.push((SlotId::action(1, t), Card::DECK));
            out.push((SlotId::state(t + 1, 0), Card::DECK));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::cards::cards;

    fn euchre() -> TrickGame<f64> {
        euchre_model(3).unwrap()
    }

    #[test]
    fn ag0_leads_its_lowest_card() {
        let g = euchre();
        let s = g.state_from_hands(
            [cards("C9 DK SA"), cards("C2 C3 C4"), cards("D2 D3 D4"), cards("H2 H3 H4")],
            Suit::Hearts,
            0,
        );
        assert_eq!(g.agent_card(&s, 0), "C9".parse().unwrap());
    }

    #[test]
    fn ag1_leads_highest_non_trump_or_highest_trump() {
        let g = euchre();
        let s = g.state_from_hands(
            [cards("C2 C3 C4"), cards("C5 C6 C7"), cards("HA D5 S9"), cards("D2 D3 D4")],
            Suit::Hearts,
            2,
        );
        assert_eq!(g.agent_card(&s, 2), "S9".parse().unwrap());
        let s = g.state_from_hands(
            [cards("C2 C3 C4"), cards("C5 C6 C7"), cards("H9 HK H2"), cards("D2 D3 D4")],
            Suit::Hearts,
            2,
        );
        assert_eq!(g.agent_card(&s, 2), "HK".parse().unwrap());
    }

    #[test]
    fn must_follow_suit() {
        let g = euchre();
        let s = g.state_from_hands(
            [cards("C2 D3 S4"), cards("C5 C6 C7"), cards("H9 HK H2"), cards("D2 D4 D5")],
            Suit::Hearts,
            1,
        );
        let s = g.play(&s, "C5".parse().unwrap()).unwrap();
        // seat 2 holds hearts only; seat 3 would have to follow clubs
        assert!(g.play(&s, "C2".parse().unwrap()).is_err());
        assert_eq!(g.valid_cards(&s, 2), cards("H2 H9 HK"));
    }

    #[test]
    fn trick_goes_to_trump_then_lead() {
        let g = euchre();
        let s = g.state_from_hands(
            [cards("C2 D3 S4"), cards("CA C6 C7"), cards("H2 HK H9"), cards("C3 D4 D5")],
            Suit::Hearts,
            0,
        );
        let mut s = s;
        for c in ["C2", "CA", "H2", "C3"] {
            s = g.play(&s, c.parse().unwrap()).unwrap();
        }
        // Ag1 ruffed the ace
        assert_eq!(s.tricks_won, [1, 0]);
        assert_eq!(s.leader, 2);
    }

    #[test]
    fn opponent_wins_cheaply_with_probability_point_eight() {
        let g = euchre();
        let s = g.state_from_hands(
            [cards("C9 D3 S4"), cards("C10 CA C2"), cards("H2 HK H9"), cards("C3 D4 D5")],
            Suit::Hearts,
            0,
        );
        let s = g.play(&s, "C9".parse().unwrap()).unwrap();
        let p: Categorical<f64> = g.opponent_policy(&s, 1);
        assert!((p.prob("C10".parse::<Card>().unwrap().index()) - 0.8).abs() < 1e-12);
        assert!((p.prob("CA".parse::<Card>().unwrap().index()) - 0.1).abs() < 1e-12);
        assert!((p.prob("C2".parse::<Card>().unwrap().index()) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn spades_bid_example() {
        let hand = cards("HA SK SQ S9 S5");
        // 3 + 2 / (5 / 3) = 4.2
        assert_eq!(spades_bid(&hand, 5), 4);
        assert_eq!(spades_bid(&cards("C2 C3 D4 H5 D6"), 5), 0);
        // 0 + 1 / (3 / 3) = 1, and 0.5 rounds up
        assert_eq!(spades_bid(&cards("S2 C3 D4"), 3), 1);
        assert_eq!(spades_bid(&cards("S2 C3 D4 H5 D6 C7"), 6), 1);
    }

    #[test]
    fn spades_scoring() {
        assert_eq!(spades_score(4, 4), 40);
        assert_eq!(spades_score(4, 6), 42);
        assert_eq!(spades_score(4, 3), -40);
        assert_eq!(spades_score(0, 10), -90);
    }

    #[test]
    fn spades_cannot_lead_unbroken() {
        let g: TrickGame<f64> = spades_model(3).unwrap();
        let s = g.state_from_hands(
            [cards("S2 D3 S4"), cards("C10 CA C2"), cards("H2 HK H9"), cards("C3 D4 D5")],
            Suit::Spades,
            0,
        );
        assert_eq!(g.valid_cards(&s, 0), cards("D3"));
        let only = g.state_from_hands(
            [cards("S2 S3 S4"), cards("C10 CA C2"), cards("H2 HK H9"), cards("C3 D4 D5")],
            Suit::Spades,
            0,
        );
        assert_eq!(g.valid_cards(&only, 0).len(), 3);
    }

    #[test]
    fn bowers_rank_on_top_of_trump() {
        let g: TrickGame<f64> =
            TrickGame::new(TrickConfig { hand_size: 3, rules: Rules::Euchre { bowers: true } }).unwrap();
        let mut s = g.state_from_hands(
            [cards("HA C2 C3"), cards("DJ C4 C5"), cards("HJ C6 C7"), cards("C8 C9 C10")],
            Suit::Hearts,
            0,
        );
        for c in ["HA", "DJ", "HJ", "C8"] {
            s = g.play(&s, c.parse().unwrap()).unwrap();
        }
        assert_eq!(s.leader, 2);
    }
}
