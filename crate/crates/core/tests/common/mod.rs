//! Independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::Rng;
use ramcts::scm::{Action, DecPomdpModel, InterventionSet, Simulator, StepCounter};
use ramcts::{Event, Exact, Trajectory};

/// A valid intervention set found by direct enumeration, with what the
/// enumerator concluded about it.
#[derive(Clone, Debug)]
pub struct Enumerated {
    /// `(t, agent, action)` in increasing `(t, agent)` order.
    pub items: Vec<(usize, usize, Action)>,
    /// Cause count per agent when the set is a candidate pair.
    pub causes: Option<Vec<usize>>,
}

impl Enumerated {
    pub fn vars(&self) -> BTreeSet<(usize, usize)> {
        self.items.iter().map(|&(t, a, _)| (t, a)).collect()
    }

    pub fn last_t(&self) -> usize {
        self.items.last().expect("nonempty").0
    }
}

fn set_of(items: &[(usize, usize, Action)]) -> InterventionSet {
    let mut x = InterventionSet::new();
    for &(t, a, act) in items {
        x = x.with(a, t, act);
    }
    x
}

fn replay<M: DecPomdpModel>(sim: &Simulator<'_, M>, items: &[(usize, usize, Action)]) -> Trajectory<M> {
    sim.rollout(&set_of(items), &mut StepCounter::unlimited()).expect("valid set replays")
}

/// Every valid set of at most `max_size` interventions, checked against the
/// definitions directly: an intervention must sit on a decision of the
/// episode produced by the earlier interventions and change that decision.
pub fn enumerate<M: DecPomdpModel>(
    model: &M,
    sim: &Simulator<'_, M>,
    event: &Event<M>,
    max_size: usize,
) -> Vec<Enumerated> {
    let factual = replay(sim, &[]);
    assert!(event.evaluate(&factual).unwrap(), "not a failure");
    let mut out = Vec::new();
    let mut stack: Vec<Vec<(usize, usize, Action)>> = vec![Vec::new()];
    while let Some(items) = stack.pop() {
        let cf = replay(sim, &items);
        if !items.is_empty() {
            out.push(Enumerated { causes: judge(model, &factual, &cf, &items, event), items: items.clone() });
        }
        if items.len() == max_size {
            continue;
        }
        let after = items.last().map(|&(t, a, _)| (t, a));
        for t in 0..model.horizon() {
            for agent in 0..model.num_agents() {
                if after.is_some_and(|k| (t, agent) <= k) {
                    continue;
                }
                let Some(info) = cf.info(agent, t) else { continue };
                if !model.acts(agent, info) {
                    continue;
                }
                let taken = cf.action(agent, t).expect("acting agent has an action");
                for act in model.valid_actions(agent, info) {
                    if act != taken {
                        let mut next = items.clone();
                        next.push((t, agent, act));
                        stack.push(next);
                    }
                }
            }
        }
    }
    out
}

/// AC1, AC2, AC4 and AC5 for one set: the failure is undone, the cause part
/// keeps the agents' factual information (so it assigns their factual
/// actions), the witness part has altered information.
fn judge<M: DecPomdpModel>(
    model: &M,
    factual: &Trajectory<M>,
    cf: &Trajectory<M>,
    items: &[(usize, usize, Action)],
    event: &Event<M>,
) -> Option<Vec<usize>> {
    if event.evaluate(cf).unwrap() {
        return None;
    }
    let mut causes = vec![0; model.num_agents()];
    for &(t, a, _) in items {
        if factual.info(a, t) == cf.info(a, t) {
            assert!(factual.action(a, t).is_some(), "unchanged information implies a factual decision");
            causes[a] += 1;
        }
    }
    causes.iter().any(|&c| c > 0).then_some(causes)
}

/// Degrees from the minimal candidate pairs (AC3): a pair counts unless
/// another pair's variables form a strict subset of its own.
pub fn oracle_assignment(sets: &[Enumerated], num_agents: usize) -> Vec<Exact> {
    let pairs: Vec<&Enumerated> = sets.iter().filter(|s| s.causes.is_some()).collect();
    let mut best = vec![Ratio::from_integer(0); num_agents];
    for p in &pairs {
        let v = p.vars();
        let minimal = !pairs.iter().any(|q| {
            let w = q.vars();
            w.len() < v.len() && w.is_subset(&v)
        });
        if !minimal {
            continue;
        }
        let causes = p.causes.as_ref().unwrap();
        for (i, &c) in causes.iter().enumerate() {
            let d = Ratio::new(c as i64, p.items.len() as i64);
            if d > best[i] {
                best[i] = d;
            }
        }
    }
    best
}

/// Standard Gumbel draws conditioned on `argmax(log p + g) == k`, by
/// rejection.
pub fn rejection_posterior<R: Rng>(rng: &mut R, probs: &[f64], k: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = probs
            .iter()
            .map(|_| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                -(-u.ln()).ln()
            })
            .collect();
        let arg = argmax(probs, &g);
        if arg == k {
            return g;
        }
    }
}

pub fn argmax(probs: &[f64], g: &[f64]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, (&p, &x)) in probs.iter().zip(g).enumerate() {
        if p > 0.0 && p.ln() + x > best.0 {
            best = (p.ln() + x, j);
        }
    }
    best.1
}

/// Total-variation distance between two histograms with equal totals.
pub fn tv(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    0.5 * a.iter().zip(b).map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs()).sum::<f64>()
}
