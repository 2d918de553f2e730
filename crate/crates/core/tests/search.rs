mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use ramcts::baselines::{bf_dt, bf_st, random_search, run_method, Method};
use ramcts::envs::{euchre_model, goofspiel_model, GoofspielConfig, ToyConfig};
use ramcts::harness::generate_losing_trajectories;
use ramcts::mcts::{search, Mcts, MctsParams};
use ramcts::scm::{Context, DecPomdpModel, Simulator, StepCounter};
use ramcts::search_tree::{Instance, NodeKind, SearchTree, ROOT};
use ramcts::{Exact, Toy};

use common::enumerate;

fn unlimited() -> MctsParams {
    MctsParams { budget: u64::MAX, ..MctsParams::default() }
}

/// Expand the whole tree and return the set of leaves as `(t, agent, action)` lists.
fn leaves<M: DecPomdpModel>(inst: &Instance<'_, M>, max_size: usize) -> BTreeSet<Vec<(usize, usize, usize)>> {
    let mut tree: SearchTree<M, Exact> = SearchTree::new(inst, max_size);
    let mut stack = vec![ROOT];
    let mut counter = StepCounter::unlimited();
    while let Some(id) = stack.pop() {
        if tree.node(id).kind == NodeKind::Leaf {
            continue;
        }
        tree.expand(id, inst, &mut counter).unwrap();
        stack.extend(tree.node(id).children.iter().copied());
    }
    tree.leaf_sets()
        .into_iter()
        .map(|x| x.iter().map(|i| (i.t, i.agent, i.action)).collect())
        .collect()
}

#[test]
fn tree_leaves_are_exactly_the_valid_sets() {
    let g = goofspiel_model::<f64>(GoofspielConfig::new(3)).unwrap();
    let event = g.outcome_event();
    for (_, ctx) in generate_losing_trajectories(&g, 5, 11, Default::default()).unwrap() {
        let inst = Instance::new(&g, &ctx, &event).unwrap();
        for size in 1..=3 {
            let oracle: BTreeSet<Vec<(usize, usize, usize)>> = enumerate(&g, &Simulator::new(&g, &ctx), &event, size)
                .into_iter()
                .map(|e| e.items)
                .collect();
            assert_eq!(leaves(&inst, size), oracle);
        }
    }
}

#[test]
fn brute_force_costs() {
    // BF-DT pays a full episode per valid set; BF-ST never pays more.
    let e = euchre_model::<f64>(3).unwrap();
    let event = e.outcome_event();
    for (_, ctx) in generate_losing_trajectories(&e, 5, 12, Default::default()).unwrap() {
        let inst = Instance::new(&e, &ctx, &event).unwrap();
        let sets = enumerate(&e, &Simulator::new(&e, &ctx), &event, 4).len() as u64;
        let dt = bf_dt(&inst, unlimited()).unwrap();
        assert!(dt.exhausted);
        assert_eq!(dt.steps, sets * e.horizon() as u64);
        let st = bf_st(&inst, unlimited(), false).unwrap();
        let pr = bf_st(&inst, unlimited(), true).unwrap();
        assert!(st.steps <= dt.steps && pr.steps <= st.steps);
    }
}

#[test]
fn every_method_respects_its_budget() {
    let e = euchre_model::<f64>(5).unwrap();
    let event = e.outcome_event();
    let (_, ctx) = generate_losing_trajectories(&e, 1, 13, Default::default()).unwrap().remove(0);
    let inst = Instance::new(&e, &ctx, &event).unwrap();
    for m in Method::ALL {
        let out = run_method(m, &inst, MctsParams { budget: 777, ..MctsParams::default() }).unwrap();
        assert!(out.steps <= 777, "{m} used {}", out.steps);
        assert!(out.trace.points.windows(2).all(|w| w[0].steps <= w[1].steps));
    }
}

#[test]
fn searches_are_deterministic_given_a_seed() {
    let e = euchre_model::<f64>(4).unwrap();
    let event = e.outcome_event();
    let (_, ctx) = generate_losing_trajectories(&e, 1, 14, Default::default()).unwrap().remove(0);
    let inst = Instance::new(&e, &ctx, &event).unwrap();
    let p = MctsParams { budget: 5_000, seed: 99, ..MctsParams::default() };
    for m in [Method::RaMcts, Method::Random] {
        let a = run_method(m, &inst, p).unwrap();
        let b = run_method(m, &inst, p).unwrap();
        assert_eq!(a.trace, b.trace, "{m}");
        assert_eq!(a.assignment, b.assignment, "{m}");
    }
}

#[test]
fn mcts_iterations_after_exhaustion_report_done() {
    let toy = Toy::new(ToyConfig { horizon: 2, actions: 2, goal: 4 });
    let event = toy.outcome_event();
    let (_, ctx) = generate_losing_trajectories(&toy, 1, 15, Default::default()).unwrap().remove(0);
    let inst = Instance::new(&toy, &ctx, &event).unwrap();
    let mut m: Mcts<'_, '_, Toy, Exact> = Mcts::new(&inst, unlimited());
    while m.iterate().unwrap() != ramcts::mcts::IterationResult::Done {}
    assert!(m.tree.node(ROOT).pruned);
    assert_eq!(m.iterate().unwrap(), ramcts::mcts::IterationResult::Done);
}

#[test]
fn scalar_choice_does_not_change_the_answer_on_small_games() {
    let g = goofspiel_model::<f64>(GoofspielConfig::new(4)).unwrap();
    let event = g.outcome_event();
    for (k, (_, ctx)) in generate_losing_trajectories(&g, 5, 16, Default::default()).unwrap().into_iter().enumerate() {
        let inst = Instance::new(&g, &ctx, &event).unwrap();
        let p = MctsParams { seed: k as u64, ..unlimited() };
        let a = search::<_, Exact>(&inst, p).unwrap();
        let b = search::<_, f64>(&inst, p).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_search_reaches_the_reference_on_the_toy(seed in any::<u64>(), run in any::<u64>()) {
        let toy = Toy::new(ToyConfig { horizon: 3, actions: 2, goal: 6 });
        let ctx = Context::from_seed(seed);
        let event = toy.outcome_event();
        let Ok(inst) = Instance::new(&toy, &ctx, &event) else { return Ok(()) };
        let reference = bf_dt(&inst, unlimited()).unwrap().assignment;
        let found = random_search(&inst, MctsParams { budget: 200_000, seed: run, ..MctsParams::default() }).unwrap();
        prop_assert_eq!(found.assignment, reference);
    }

    #[test]
    fn degrees_only_grow_along_a_trace(seed in any::<u64>(), run in any::<u64>()) {
        let g = goofspiel_model::<f64>(GoofspielConfig::new(4)).unwrap();
        let ctx = Context::from_seed(seed);
        let event = g.outcome_event();
        let Ok(inst) = Instance::new(&g, &ctx, &event) else { return Ok(()) };
        let out = search::<_, Exact>(&inst, MctsParams { budget: 3_000, seed: run, ..MctsParams::default() }).unwrap();
        for w in out.trace.points.windows(2) {
            for (a, b) in w[0].degrees.iter().zip(&w[1].degrees) {
                prop_assert!(a <= b);
            }
        }
    }
}
