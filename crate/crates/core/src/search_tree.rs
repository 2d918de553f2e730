//! The intervention search tree.
//!
//! Node grammar: `Root -> TimeStep -> Agent -> Action -> {Leaf, TimeStep}`.
//! A path encodes an intervention set, one `Agent`/`Action` pair per
//! intervention, with `(t, agent)` keys strictly increasing along the path,
//! so every valid set is encoded by exactly one `Leaf`.
//!
//! `TimeStep(t)` nodes cache the counterfactual prefix at `t` under the
//! interventions above them. Expanding an `Action` node simulates its
//! intervention set from that prefix to the end of the episode, which is the
//! only simulation the tree ever charges; the resulting trajectory is kept
//! for the `Leaf` and its intermediate prefixes seed the `TimeStep` children.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::causality::{classify_trajectories, CandidatePair, CausalityError, Event, FoundSet, ResponsibilityAssignment};
use crate::scalar::{Exact, Scalar};
use crate::scm::{Action, Context, DecPomdpModel, InterventionSet, Prefix, ScmError, SlotKey, Simulator, StepCounter, Trajectory};

/// A causal setting together with the failure being explained.
pub struct Instance<'a, M: DecPomdpModel> {
    pub model: &'a M,
    pub context: &'a Context<M::Prob>,
    pub event: &'a Event<M>,
    pub factual: Trajectory<M>,
}

impl<'a, M: DecPomdpModel> Instance<'a, M> {
    /// Fails with `NotAFailure` when the event does not hold factually.
    pub fn new(model: &'a M, context: &'a Context<M::Prob>, event: &'a Event<M>) -> Result<Self, CausalityError> {
        let factual = Simulator::new(model, context).factual()?;
        if !event.evaluate(&factual)? {
            return Err(CausalityError::NotAFailure);
        }
        Ok(Self { model, context, event, factual })
    }

    pub fn simulator(&self) -> Simulator<'a, M> {
        Simulator::new(self.model, self.context)
    }

    pub fn num_agents(&self) -> usize {
        self.model.num_agents()
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    /// Score vector of an evaluated set: the degrees if it is a candidate
    /// pair (zeros otherwise), followed by `q_env`.
    pub fn score(&self, pair: Option<&CandidatePair>, cf: &Trajectory<M>) -> Vec<Exact> {
        let mut r = match pair {
            Some(p) => p.degrees(),
            None => vec![Exact::from_integer(0); self.num_agents()],
        };
        r.push(self.model.q_env(self.factual.outcome(), cf.outcome()));
        r
    }
}

/// Degrees at a point of a search run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub steps: u64,
    #[serde(skip)]
    pub degrees: Vec<Exact>,
}

/// Assignment checkpoints, recorded whenever the assignment changes and at
/// the end of the run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub points: Vec<TracePoint>,
}

impl Trace {
    pub fn record(&mut self, steps: u64, assignment: &ResponsibilityAssignment) {
        if let Some(last) = self.points.last() {
            if last.degrees == assignment.degrees {
                return;
            }
        }
        self.points.push(TracePoint { steps, degrees: assignment.degrees.clone() });
    }

    /// Close the trace at `steps`, the total spent by the run.
    pub fn finish(&mut self, steps: u64, assignment: &ResponsibilityAssignment) {
        match self.points.last() {
            Some(last) if last.steps == steps && last.degrees == assignment.degrees => {}
            _ => self.points.push(TracePoint { steps, degrees: assignment.degrees.clone() }),
        }
    }

    /// Degrees known after spending `steps`: the last checkpoint at or before it.
    pub fn at(&self, steps: u64, num_agents: usize) -> Vec<Exact> {
        self.points
            .iter()
            .take_while(|p| p.steps <= steps)
            .last()
            .map(|p| p.degrees.clone())
            .unwrap_or_else(|| vec![Exact::from_integer(0); num_agents])
    }

    /// CSV with header `steps,agent0_degree,...`.
    pub fn write_csv<W: Write>(&self, w: W, num_agents: usize) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["steps".to_string()];
        header.extend((0..num_agents).map(|i| format!("agent{i}_degree")));
        out.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.steps.to_string()];
            row.extend(p.degrees.iter().map(|d| Scalar::to_f64(d).to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Result of one search run.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub assignment: ResponsibilityAssignment,
    pub found: FoundSet,
    pub trace: Trace,
    pub steps: u64,
    /// The whole space of intervention sets was covered.
    pub exhausted: bool,
}

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    TimeStep(usize),
    Agent(usize),
    Action(Action),
    Leaf,
}

pub struct Node<M: DecPomdpModel, S> {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub expanded: bool,
    pub n: u64,
    pub q: Vec<S>,
    pub pruned: bool,
    /// Interventions encoded on the path down to this node, including its own.
    pub interventions: InterventionSet,
    /// Key of the `Agent`/`Action` node's variable.
    pub key: Option<SlotKey>,
    prefix: Option<Prefix<M>>,
    counterfactual: Option<Trajectory<M>>,
    pub evaluated: bool,
}

impl<M: DecPomdpModel, S> Node<M, S> {
    /// The node's time-step: the one it intervenes on or is positioned at.
    pub fn t(&self) -> Option<usize> {
        match self.kind {
            NodeKind::TimeStep(t) => Some(t),
            _ => self.key.map(|k| k.t),
        }
    }
}

/// What evaluating a leaf produced.
#[derive(Clone, Debug)]
pub struct LeafEvaluation {
    pub pair: Option<CandidatePair>,
    pub score: Vec<Exact>,
    /// The pair was stored in the found set.
    pub inserted: bool,
}

pub struct SearchTree<M: DecPomdpModel, S> {
    nodes: Vec<Node<M, S>>,
    max_size: usize,
    dims: usize,
}

impl<M: DecPomdpModel, S: Scalar> SearchTree<M, S> {
    pub fn new(instance: &Instance<'_, M>, max_size: usize) -> Self {
        let dims = instance.num_agents() + 1;
        let root = Node {
            kind: NodeKind::Root,
            parent: None,
            children: Vec::new(),
            expanded: false,
            n: 0,
            q: vec![S::zero(); dims],
            pruned: false,
            interventions: InterventionSet::new(),
            key: None,
            prefix: None,
            counterfactual: None,
            evaluated: false,
        };
        Self { nodes: vec![root], max_size, dims }
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node<M, S> {
        &self.nodes[id]
    }

    pub fn ids(&self) -> std::ops::Range<NodeId> {
        0..self.nodes.len()
    }

    pub fn unpruned_children(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id].children.iter().copied().filter(|&c| !self.nodes[c].pruned).collect()
    }

    fn push(&mut self, parent: NodeId, kind: NodeKind, key: Option<SlotKey>, interventions: InterventionSet) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind,
            parent: Some(parent),
            children: Vec::new(),
            expanded: false,
            n: 0,
            q: vec![S::zero(); self.dims],
            pruned: false,
            interventions,
            key,
            prefix: None,
            counterfactual: None,
            evaluated: false,
        });
        self.nodes[parent].children.push(id);
        id
    }

    fn push_timestep(&mut self, parent: NodeId, t: usize, interventions: InterventionSet, prefix: Prefix<M>) {
        let id = self.push(parent, NodeKind::TimeStep(t), None, interventions);
        self.nodes[id].prefix = Some(prefix);
    }

    /// Prefix at the node's time-step (`TimeStep` and `Agent` nodes).
    fn prefix_of(&self, id: NodeId) -> &Prefix<M> {
        let n = &self.nodes[id];
        match n.kind {
            NodeKind::TimeStep(_) => n.prefix.as_ref().expect("time-step prefix"),
            NodeKind::Agent(_) => self.prefix_of(n.parent.expect("agent parent")),
            NodeKind::Action(_) => self.prefix_of(n.parent.expect("action parent")),
            _ => panic!("node {id} has no prefix"),
        }
    }

    fn acting(instance: &Instance<'_, M>, prefix: &Prefix<M>, after: Option<SlotKey>) -> Vec<usize> {
        (0..instance.num_agents())
            .filter(|&i| instance.model.acts(i, prefix.info(i)))
            .filter(|&i| after.map_or(true, |k| SlotKey::new(i, prefix.t()) > k))
            .collect()
    }

    /// Materialize the children of `id`. Only `Action` nodes spend budget.
    pub fn expand(&mut self, id: NodeId, instance: &Instance<'_, M>, counter: &mut StepCounter) -> Result<(), ScmError> {
        if self.nodes[id].expanded {
            return Ok(());
        }
        let x = self.nodes[id].interventions.clone();
        match self.nodes[id].kind {
            NodeKind::Root => {
                for p in instance.factual.prefixes() {
                    if !Self::acting(instance, &p, None).is_empty() {
                        self.push_timestep(id, p.t(), x.clone(), p);
                    }
                }
            }
            NodeKind::TimeStep(t) => {
                let prefix = self.prefix_of(id).clone();
                for i in Self::acting(instance, &prefix, x.last_key()) {
                    self.push(id, NodeKind::Agent(i), Some(SlotKey::new(i, t)), x.clone());
                }
            }
            NodeKind::Agent(i) => {
                let key = self.nodes[id].key.expect("agent key");
                let prefix = self.prefix_of(id).clone();
                let default = instance.simulator().default_action(&prefix, i)?;
                for a in instance.model.valid_actions(i, prefix.info(i)) {
                    if Some(a) != default {
                        self.push(id, NodeKind::Action(a), Some(key), x.with(i, key.t, a));
                    }
                }
            }
            NodeKind::Action(_) => {
                let key = self.nodes[id].key.expect("action key");
                let prefix = self.prefix_of(id).clone();
                let (cf, prefixes) = instance.simulator().complete_with_prefixes(&prefix, &x, counter)?;
                let leaf = self.push(id, NodeKind::Leaf, None, x.clone());
                self.nodes[leaf].counterfactual = Some(cf);
                if x.len() < self.max_size {
                    for p in prefixes {
                        if !Self::acting(instance, &p, Some(key)).is_empty() {
                            self.push_timestep(id, p.t(), x.clone(), p);
                        }
                    }
                }
            }
            NodeKind::Leaf => {}
        }
        self.nodes[id].expanded = true;
        Ok(())
    }

    /// Variable set of an `Agent` node: the interventions above it plus its own key.
    pub fn agent_variables(&self, id: NodeId) -> BTreeSet<SlotKey> {
        let n = &self.nodes[id];
        let mut vars = n.interventions.keys();
        vars.extend(n.key);
        vars
    }

    /// Rule 3: is this `Agent` node's variable set a strict superset of a found one?
    pub fn non_minimal(&self, id: NodeId, found: &FoundSet) -> bool {
        matches!(self.nodes[id].kind, NodeKind::Agent(_)) && found.is_non_minimal(&self.agent_variables(id))
    }

    /// Mark `id` pruned and apply rule 4 upward.
    pub fn prune(&mut self, id: NodeId) {
        self.nodes[id].pruned = true;
        self.nodes[id].counterfactual = None;
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            let node = &self.nodes[p];
            if node.pruned || !node.expanded || node.children.iter().any(|&c| !self.nodes[c].pruned) {
                break;
            }
            self.nodes[p].pruned = true;
            cur = self.nodes[p].parent;
        }
    }

    /// Rule 4 for a node whose expansion produced no children.
    pub fn prune_if_exhausted(&mut self, id: NodeId) -> bool {
        let n = &self.nodes[id];
        if n.expanded && !n.pruned && n.children.iter().all(|&c| self.nodes[c].pruned) {
            self.prune(id);
            return true;
        }
        false
    }

    /// Classify a leaf's set and store a found pair. The leaf is pruned
    /// (rule 1); with `pruning` a found pair also prunes its `Agent` node
    /// (rule 2).
    pub fn evaluate_leaf(
        &mut self,
        id: NodeId,
        instance: &Instance<'_, M>,
        found: &mut FoundSet,
        pruning: bool,
    ) -> Result<LeafEvaluation, CausalityError> {
        let node = &mut self.nodes[id];
        assert_eq!(node.kind, NodeKind::Leaf, "evaluate_leaf on a non-leaf");
        let cf = node.counterfactual.take().ok_or_else(|| {
            CausalityError::Contract(format!("leaf {id} was already evaluated"))
        })?;
        node.evaluated = true;
        let x = node.interventions.clone();
        let pair = classify_trajectories(instance.model, &instance.factual, &cf, &x, instance.event)?;
        let score = instance.score(pair.as_ref(), &cf);
        let inserted = match &pair {
            Some(p) => found.insert_and_filter(p.clone()),
            None => false,
        };
        self.prune(id);
        if pruning && pair.is_some() {
            // leaf -> action -> agent
            let action = self.nodes[id].parent.expect("leaf parent");
            let agent = self.nodes[action].parent.expect("action parent");
            self.prune(agent);
        }
        Ok(LeafEvaluation { pair, score, inserted })
    }

    /// Add `(r, +1)` to `id` and all its ancestors.
    pub fn backpropagate(&mut self, id: NodeId, r: &[S]) {
        let mut cur = Some(id);
        while let Some(v) = cur {
            let node = &mut self.nodes[v];
            node.n += 1;
            for (q, x) in node.q.iter_mut().zip(r) {
                *q = q.clone() + x.clone();
            }
            cur = node.parent;
        }
    }

    /// Remove every trace of `id`'s visits from its ancestors.
    pub fn erase_footprint(&mut self, id: NodeId) {
        let n = self.nodes[id].n;
        let q = self.nodes[id].q.clone();
        let mut cur = self.nodes[id].parent;
        while let Some(v) = cur {
            let node = &mut self.nodes[v];
            node.n -= n;
            for (a, b) in node.q.iter_mut().zip(&q) {
                *a = a.clone() - b.clone();
            }
            cur = node.parent;
        }
    }

    /// Ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(v) = cur {
            out.push(v);
            cur = self.nodes[v].parent;
        }
        out
    }

    pub fn leaf_sets(&self) -> Vec<InterventionSet> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Leaf).map(|n| n.interventions.clone()).collect()
    }

    /// One JSON object per node: kind, key, N, Q, pruned.
    pub fn dump_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                json!({
                    "id": id,
                    "parent": n.parent,
                    "kind": n.kind,
                    "key": n.key,
                    "n": n.n,
                    "q": n.q.iter().map(Scalar::to_f64).collect::<Vec<_>>(),
                    "pruned": n.pruned,
                })
            })
            .collect();
        json!({ "nodes": nodes })
    }
}
