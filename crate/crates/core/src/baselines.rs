//! Reference searchers: RANDOM, BF-DT, BF-ST and BF-ST-PRUN.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::causality::{classify_trajectories, CausalityError, FoundSet};
use crate::mcts::{self, MctsParams};
use crate::scm::{DecPomdpModel, InterventionSet, ScmError, SlotKey, StepCounter, Trajectory};
use crate::search_tree::{Instance, NodeId, NodeKind, SearchOutcome, SearchTree, Trace, ROOT};
use crate::Exact;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ra-mcts")]
    RaMcts,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "bf-dt")]
    BfDt,
    #[serde(rename = "bf-st")]
    BfSt,
    #[serde(rename = "bf-st-prun")]
    BfStPrun,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::RaMcts, Method::Random, Method::BfDt, Method::BfSt, Method::BfStPrun];

    pub fn name(self) -> &'static str {
        match self {
            Method::RaMcts => "ra-mcts",
            Method::Random => "random",
            Method::BfDt => "bf-dt",
            Method::BfSt => "bf-st",
            Method::BfStPrun => "bf-st-prun",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm || (norm == "mcts" && *m == Method::RaMcts))
            .ok_or_else(|| format!("unknown method {s:?}; valid methods: {}", Method::valid_names()))
    }
}

/// Run `method` with `params` on one instance. Brute-force methods stop at
/// exhaustion or when the budget runs out.
pub fn run_method<M: DecPomdpModel>(
    method: Method,
    instance: &Instance<'_, M>,
    params: MctsParams,
) -> Result<SearchOutcome, CausalityError> {
    match method {
        Method::RaMcts => mcts::search::<M, f64>(instance, params),
        Method::Random => random_search(instance, params),
        Method::BfDt => bf_dt(instance, params),
        Method::BfSt => bf_st(instance, params, false),
        Method::BfStPrun => bf_st(instance, params, true),
    }
}

/// Shared bookkeeping of the brute-force and random searchers.
struct Run<'i, 'a, M: DecPomdpModel> {
    instance: &'i Instance<'a, M>,
    found: FoundSet,
    trace: Trace,
    counter: StepCounter,
}

impl<'i, 'a, M: DecPomdpModel> Run<'i, 'a, M> {
    fn new(instance: &'i Instance<'a, M>, budget: u64) -> Self {
        Self { instance, found: FoundSet::new(), trace: Trace::default(), counter: StepCounter::new(budget) }
    }

    fn consider(&mut self, x: &InterventionSet, cf: &Trajectory<M>) -> Result<(), CausalityError> {
        let inst = self.instance;
        if let Some(pair) = classify_trajectories(inst.model, &inst.factual, cf, x, inst.event)? {
            if self.found.insert_and_filter(pair) {
                self.trace.record(self.counter.used(), &self.found.assignment(inst.num_agents()));
            }
        }
        Ok(())
    }

    fn finish(mut self, exhausted: bool) -> SearchOutcome {
        let assignment = self.found.assignment(self.instance.num_agents());
        self.trace.finish(self.counter.used(), &assignment);
        SearchOutcome { assignment, found: self.found, trace: self.trace, steps: self.counter.used(), exhausted }
    }
}

/// Does any factual decision have an alternative? Otherwise no intervention
/// set is valid: the earliest intervention of a set sits on the factual
/// prefix.
fn has_alternatives<M: DecPomdpModel>(instance: &Instance<'_, M>) -> Result<bool, ScmError> {
    let sim = instance.simulator();
    for p in instance.factual.prefixes() {
        for i in 0..instance.num_agents() {
            if instance.model.acts(i, p.info(i)) {
                let default = sim.default_action(&p, i)?;
                if instance.model.valid_actions(i, p.info(i)).iter().any(|&a| Some(a) != default) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Repeatedly draw an intervention set and classify it.
///
/// A draw picks a size `k` uniformly in `1..=max_size` and `k` distinct
/// decision ordinals out of the factual number of agent decisions. One
/// rollout from `t = 0` then intervenes at the decisions with those
/// ordinals, in the order they occur, each with an action drawn uniformly
/// from the valid actions other than the one the agent would take there.
/// Addressing decisions by ordinal keeps every valid set reachable when
/// interventions move an agent's turns.
pub fn random_search<M: DecPomdpModel>(
    instance: &Instance<'_, M>,
    params: MctsParams,
) -> Result<SearchOutcome, CausalityError> {
    let mut run = Run::new(instance, params.budget);
    if !has_alternatives(instance)? {
        return Ok(run.finish(true));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let decisions = instance.factual.decision_slots().len();
    let sim = instance.simulator();
    let model = instance.model;
    'draws: while !run.counter.exhausted() {
        let k = rng.gen_range(1..=params.max_size.min(decisions));
        let chosen: BTreeSet<usize> = index::sample(&mut rng, decisions, k).into_iter().collect();
        let mut x = InterventionSet::new();
        let mut ordinal = 0usize;
        let mut p = sim.initial()?;
        while p.t() < model.horizon() {
            for i in 0..model.num_agents() {
                if !model.acts(i, p.info(i)) {
                    continue;
                }
                if chosen.contains(&ordinal) {
                    let default = sim.default_action(&p, i)?;
                    let alts: Vec<_> = model
                        .valid_actions(i, p.info(i))
                        .into_iter()
                        .filter(|&a| Some(a) != default)
                        .collect();
                    if let Some(&a) = alts.choose(&mut rng) {
                        x = x.with(i, p.t(), a);
                    }
                }
                ordinal += 1;
            }
            p = match sim.step(&p, &x, &mut run.counter) {
                Ok(next) => next,
                Err(ScmError::BudgetExhausted) => break 'draws,
                Err(e) => return Err(e.into()),
            };
        }
        if x.is_empty() {
            continue;
        }
        let cf = sim.complete(&p, &x, &mut run.counter)?;
        run.consider(&x, &cf)?;
    }
    Ok(run.finish(false))
}

/// Brute force over the decision tree: every valid set of size at most
/// `max_size`, in lexicographic order of its `(t, agent, action)` sequence,
/// each simulated from `t = 0`.
pub fn bf_dt<M: DecPomdpModel>(instance: &Instance<'_, M>, params: MctsParams) -> Result<SearchOutcome, CausalityError> {
    bf_dt_restricted(instance, params, None)
}

/// [`bf_dt`] over sets whose variables all lie in `allowed` (all slots when `None`).
pub fn bf_dt_restricted<M: DecPomdpModel>(
    instance: &Instance<'_, M>,
    params: MctsParams,
    allowed: Option<&BTreeSet<SlotKey>>,
) -> Result<SearchOutcome, CausalityError> {
    let mut run = Run::new(instance, params.budget);
    let factual = instance.factual.clone();
    let complete = match dt_visit(&mut run, &InterventionSet::new(), &factual, params.max_size, allowed) {
        Ok(()) => true,
        Err(CausalityError::Scm(ScmError::BudgetExhausted)) => false,
        Err(e) => return Err(e),
    };
    Ok(run.finish(complete))
}

fn dt_visit<M: DecPomdpModel>(
    run: &mut Run<'_, '_, M>,
    x: &InterventionSet,
    traj: &Trajectory<M>,
    max_size: usize,
    allowed: Option<&BTreeSet<SlotKey>>,
) -> Result<(), CausalityError> {
    if x.len() >= max_size {
        return Ok(());
    }
    let model = run.instance.model;
    let last = x.last_key();
    for (agent, t) in traj.decision_slots() {
        let key = SlotKey::new(agent, t);
        if last.is_some_and(|l| key <= l) || allowed.is_some_and(|s| !s.contains(&key)) {
            continue;
        }
        let info = traj.info(agent, t).expect("decision slot info");
        let taken = traj.action(agent, t);
        for a in model.valid_actions(agent, info) {
            if Some(a) == taken {
                continue;
            }
            let next = x.with(agent, t, a);
            let cf = run.instance.simulator().rollout(&next, &mut run.counter)?;
            run.consider(&next, &cf)?;
            dt_visit(run, &next, &cf, max_size, allowed)?;
        }
    }
    Ok(())
}

/// Depth-first traversal of the search tree with prefix caching; `prune`
/// enables the pruning rules (BF-ST-PRUN).
pub fn bf_st<M: DecPomdpModel>(
    instance: &Instance<'_, M>,
    params: MctsParams,
    prune: bool,
) -> Result<SearchOutcome, CausalityError> {
    let mut tree: SearchTree<M, Exact> = SearchTree::new(instance, params.max_size);
    let mut run = Run::new(instance, params.budget);
    let complete = match st_visit(&mut tree, &mut run, ROOT, prune) {
        Ok(()) => true,
        Err(CausalityError::Scm(ScmError::BudgetExhausted)) => false,
        Err(e) => return Err(e),
    };
    Ok(run.finish(complete))
}

fn st_visit<M: DecPomdpModel>(
    tree: &mut SearchTree<M, Exact>,
    run: &mut Run<'_, '_, M>,
    id: NodeId,
    prune: bool,
) -> Result<(), CausalityError> {
    if tree.node(id).pruned {
        return Ok(());
    }
    if prune && tree.non_minimal(id, &run.found) {
        tree.prune(id);
        return Ok(());
    }
    if tree.node(id).kind == NodeKind::Leaf {
        let eval = tree.evaluate_leaf(id, run.instance, &mut run.found, prune)?;
        if eval.inserted {
            let n = run.instance.num_agents();
            run.trace.record(run.counter.used(), &run.found.assignment(n));
        }
        return Ok(());
    }
    tree.expand(id, run.instance, &mut run.counter)?;
    let children = tree.node(id).children.clone();
    for c in children {
        // a found pair below may have pruned this node
        if tree.node(id).pruned {
            break;
        }
        st_visit(tree, run, c, prune)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "greedy".parse::<Method>().unwrap_err();
        assert!(err.contains("bf-st-prun") && err.contains("ra-mcts"));
    }
}
