//! Responsibility-attribution MCTS.
//!
//! Each iteration walks from the root by UCB1 over a linear scalarization of
//! the score vectors, materializing children as it goes, until it reaches a
//! leaf; the whole path becomes part of the tree. The scalarization weights
//! rotate over the agents: iteration `k` puts `1 - B` on agent `k mod n` and
//! `B` on the environment component `q_env`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{CausalityError, Event, FoundSet};
use crate::scalar::{Exact, Scalar};
use crate::scm::{posterior_sample_context, DecPomdpModel, ScmError, StepCounter, Trajectory};
use crate::search_tree::{Instance, NodeId, NodeKind, SearchOutcome, SearchTree, Trace, ROOT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MctsParams {
    /// Exploration constant `C`.
    pub c: f64,
    /// Weight `B` of the environment component.
    pub b: f64,
    /// Largest intervention set considered.
    pub max_size: usize,
    /// Environment steps available to one run.
    pub budget: u64,
    pub seed: u64,
}

impl Default for MctsParams {
    fn default() -> Self {
        Self { c: 2.0, b: 0.5, max_size: 4, budget: 100_000, seed: 0 }
    }
}

/// Weights for iteration `k`: `1 - b` on agent `k mod n`, `b` on the last
/// component.
pub fn weight_schedule<S: Scalar>(k: u64, n: usize, b: &S) -> Vec<S> {
    let mut w = vec![S::zero(); n + 1];
    w[(k % n as u64) as usize] = S::one() - b.clone();
    w[n] = b.clone();
    w
}

/// `sum_j w_j q_j`.
pub fn scalarize<S: Scalar>(q: &[S], weights: &[S]) -> Result<S, CausalityError> {
    if q.len() != weights.len() {
        return Err(CausalityError::Contract(format!(
            "score vector of length {} with {} weights",
            q.len(),
            weights.len()
        )));
    }
    Ok(q.iter().zip(weights).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
}

/// UCB1 value of a visited child.
pub fn ucb(scalarized_total: f64, visits: u64, parent_visits: u64, c: f64) -> f64 {
    let n = visits as f64;
    scalarized_total / n + c * ((parent_visits as f64).ln() / n).sqrt()
}

/// Unvisited children first (uniformly), then the UCB1 maximum with ties
/// broken uniformly.
pub fn select_child<M: DecPomdpModel, S: Scalar, R: Rng>(
    tree: &SearchTree<M, S>,
    parent: NodeId,
    weights: &[S],
    c: f64,
    rng: &mut R,
) -> Result<NodeId, CausalityError> {
    let children = tree.unpruned_children(parent);
    if children.is_empty() {
        return Err(CausalityError::Contract(format!("node {parent} has no unpruned child")));
    }
    let fresh: Vec<NodeId> = children.iter().copied().filter(|&v| tree.node(v).n == 0).collect();
    if let Some(&v) = fresh.choose(rng) {
        return Ok(v);
    }
    let parent_n = tree.node(parent).n;
    let mut best = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    for v in children {
        let node = tree.node(v);
        let value = ucb(scalarize(&node.q, weights)?.to_f64(), node.n, parent_n, c);
        if value > best_value {
            best_value = value;
            best.clear();
            best.push(v);
        } else if value == best_value {
            best.push(v);
        }
    }
    Ok(*best.choose(rng).expect("at least one child"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationResult {
    /// A leaf was evaluated and its score backpropagated.
    Evaluated,
    /// The walk stopped at a node it pruned.
    Pruned,
    /// The budget ran out during a simulation.
    BudgetExhausted,
    /// Nothing left to search.
    Done,
}

/// What an iteration did, for replaying statistics.
#[derive(Clone, Debug, PartialEq)]
pub enum LogEntry<S> {
    Backprop { path: Vec<NodeId>, score: Vec<S> },
    Erase { node: NodeId },
}

/// A search run over one causal setting.
pub struct Mcts<'i, 'a, M: DecPomdpModel, S: Scalar> {
    pub instance: &'i Instance<'a, M>,
    pub params: MctsParams,
    pub tree: SearchTree<M, S>,
    pub found: FoundSet,
    pub counter: StepCounter,
    pub iterations: u64,
    rng: ChaCha8Rng,
    b: S,
    log: Option<Vec<LogEntry<S>>>,
}

impl<'i, 'a, M: DecPomdpModel, S: Scalar> Mcts<'i, 'a, M, S> {
    pub fn new(instance: &'i Instance<'a, M>, params: MctsParams) -> Self {
        Self {
            instance,
            params,
            tree: SearchTree::new(instance, params.max_size),
            found: FoundSet::new(),
            counter: StepCounter::new(params.budget),
            iterations: 0,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            b: b_as_scalar(params.b),
            log: None,
        }
    }

    /// Keep a log of every statistics update.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn log(&self) -> Option<&[LogEntry<S>]> {
        self.log.as_deref()
    }

    pub fn iterate(&mut self) -> Result<IterationResult, CausalityError> {
        if self.tree.node(ROOT).pruned {
            return Ok(IterationResult::Done);
        }
        let k = self.iterations;
        self.iterations += 1;
        let weights = weight_schedule(k, self.instance.num_agents(), &self.b);
        let mut v = ROOT;
        let mut path = vec![ROOT];
        loop {
            let kind = self.tree.node(v).kind;
            if kind == NodeKind::Leaf {
                let eval = self.tree.evaluate_leaf(v, self.instance, &mut self.found, true)?;
                let r: Vec<S> = eval.score.iter().map(S::from_exact).collect();
                self.tree.backpropagate(v, &r);
                if let Some(log) = &mut self.log {
                    log.push(LogEntry::Backprop { path, score: r });
                }
                return Ok(IterationResult::Evaluated);
            }
            if self.tree.non_minimal(v, &self.found) {
                self.tree.erase_footprint(v);
                self.tree.prune(v);
                if let Some(log) = &mut self.log {
                    log.push(LogEntry::Erase { node: v });
                }
                return Ok(IterationResult::Pruned);
            }
            if !self.tree.node(v).expanded {
                match self.tree.expand(v, self.instance, &mut self.counter) {
                    Ok(()) => {}
                    Err(ScmError::BudgetExhausted) => return Ok(IterationResult::BudgetExhausted),
                    Err(e) => return Err(e.into()),
                }
                if self.tree.prune_if_exhausted(v) {
                    return Ok(IterationResult::Pruned);
                }
            }
            v = select_child(&self.tree, v, &weights, self.params.c, &mut self.rng)?;
            path.push(v);
        }
    }

    /// Iterate until the budget is spent or the tree is exhausted.
    pub fn run(mut self) -> Result<SearchOutcome, CausalityError> {
        let n = self.instance.num_agents();
        let mut trace = Trace::default();
        while !self.tree.node(ROOT).pruned && !self.counter.exhausted() {
            match self.iterate()? {
                IterationResult::Evaluated => trace.record(self.counter.used(), &self.found.assignment(n)),
                IterationResult::Pruned => {}
                IterationResult::BudgetExhausted | IterationResult::Done => break,
            }
        }
        let assignment = self.found.assignment(n);
        trace.finish(self.counter.used(), &assignment);
        Ok(SearchOutcome {
            assignment,
            found: self.found,
            trace,
            steps: self.counter.used(),
            exhausted: self.tree.node(ROOT).pruned,
        })
    }
}

fn b_as_scalar<S: Scalar>(b: f64) -> S {
    // B is a short decimal in practice; keep it exact when S is
    let scaled = (b * 1_000_000.0).round() as i64;
    S::from_ratio(scaled, 1_000_000)
}

/// RA-MCTS over a known context.
pub fn search<M: DecPomdpModel, S: Scalar>(
    instance: &Instance<'_, M>,
    params: MctsParams,
) -> Result<SearchOutcome, CausalityError> {
    Mcts::<M, S>::new(instance, params).run()
}

/// Per-sample results and their average degrees.
#[derive(Clone, Debug)]
pub struct UncertainEstimate {
    pub mean: Vec<Exact>,
    pub samples: Vec<SearchOutcome>,
}

/// Average the assignment over `samples` contexts drawn from the posterior
/// given `observed`. Each sample gets the full budget of `params`.
pub fn estimate_under_uncertainty<M: DecPomdpModel, S: Scalar>(
    model: &M,
    observed: &Trajectory<M>,
    event: &Event<M>,
    samples: usize,
    params: MctsParams,
) -> Result<UncertainEstimate, CausalityError> {
    if samples == 0 {
        return Err(CausalityError::Contract("at least one posterior sample is needed".into()));
    }
    let outcomes: Vec<SearchOutcome> = (0..samples)
        .into_par_iter()
        .map(|m| {
            let seed = crate::harness::derive_seed(params.seed, &[0x5a, m as u64]);
            let context = posterior_sample_context(model, observed, seed)?;
            let instance = Instance::new(model, &context, event)?;
            search::<M, S>(&instance, MctsParams { seed, ..params })
        })
        .collect::<Result<_, _>>()?;
    let n = model.num_agents();
    let mut mean = vec![Exact::from_integer(0); n];
    for o in &outcomes {
        for (acc, d) in mean.iter_mut().zip(&o.assignment.degrees) {
            *acc += d;
        }
    }
    let m = Exact::from_integer(samples as i64);
    for d in mean.iter_mut() {
        *d /= m;
    }
    Ok(UncertainEstimate { mean, samples: outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn schedule_rotates_over_agents() {
        let half = Ratio::new(1, 2);
        let z = Ratio::from_integer(0);
        assert_eq!(weight_schedule::<Exact>(0, 2, &half), vec![half, z, half]);
        assert_eq!(weight_schedule::<Exact>(1, 2, &half), vec![z, half, half]);
        assert_eq!(weight_schedule::<f64>(5, 3, &0.0), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn scalarize_is_a_dot_product() {
        let q: Vec<Exact> = vec![Ratio::new(1, 2), Ratio::new(3, 10), Ratio::new(4, 5)];
        let b: Vec<Exact> = vec![Ratio::new(1, 2), Ratio::from_integer(0), Ratio::new(1, 2)];
        assert_eq!(scalarize(&q, &b).unwrap(), Ratio::new(65, 100));
        assert!(scalarize(&q, &b[..2]).is_err());
    }

    #[test]
    fn ucb_prefers_the_rarely_visited_child() {
        // 0.2 + 2 sqrt(ln 11) > 0.9 + 2 sqrt(ln 11 / 10)
        let a = ucb(0.9 * 10.0, 10, 11, 2.0);
        let b = ucb(0.2, 1, 11, 2.0);
        assert!(b > a);
    }

    #[test]
    fn b_keeps_short_decimals_exact() {
        assert_eq!(b_as_scalar::<Exact>(0.5), Ratio::new(1, 2));
        assert_eq!(b_as_scalar::<Exact>(0.25), Ratio::new(1, 4));
    }
}
