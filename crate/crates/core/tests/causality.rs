mod common;

use num_rational::Ratio;
use proptest::prelude::*;
use ramcts::baselines::{bf_dt, bf_st, random_search};
use ramcts::causality::{classify, classify_trajectories, CausalityError};
use ramcts::envs::{euchre_model, goofspiel_model, spades_model, GoofspielConfig, ToyConfig};
use ramcts::mcts::{search, MctsParams};
use ramcts::scm::{Context, DecPomdpModel, InterventionSet, Simulator, StepCounter};
use ramcts::search_tree::Instance;
use ramcts::{Event, Exact, Toy};

use common::{enumerate, oracle_assignment};

fn unlimited() -> MctsParams {
    MctsParams { budget: u64::MAX, ..MctsParams::default() }
}

/// First context whose factual toy episode is s = 0, 1, 2 with
/// Ag0 playing 1, 0 and Ag1 playing 0, 1.
fn toy_setting(toy: &Toy) -> Context<f64> {
    (0..10_000u64)
        .map(Context::from_seed)
        .find(|c| {
            let f = Simulator::new(toy, c).factual().unwrap();
            f.state(0) == Some(&0)
                && [f.action(0, 0), f.action(0, 1), f.action(1, 0), f.action(1, 1)] == [Some(1), Some(0), Some(0), Some(1)]
        })
        .expect("a matching context among the first seeds")
}

#[test]
fn toy_hand_computation() {
    // Ag1 playing 1 at t = 0 lifts s to 2; both then play 1 (Ag1's draw
    // keeps its distribution) and s ends at 4. Ag0 playing 1 at t = 1 ends
    // at 3. Each single intervention keeps the intervened agent's
    // information, so both agents get degree 1.
    let toy = Toy::new(ToyConfig::default());
    let ctx = toy_setting(&toy);
    let event = toy.outcome_event();
    let inst = Instance::new(&toy, &ctx, &event).unwrap();

    let only_ag1 = classify(&toy, &ctx, &InterventionSet::new().with(1, 0, 1), &event, &mut StepCounter::unlimited())
        .unwrap()
        .expect("a candidate pair");
    assert_eq!(only_ag1.degrees(), vec![Ratio::from_integer(0), Ratio::from_integer(1)]);
    let only_ag0 = classify(&toy, &ctx, &InterventionSet::new().with(0, 1, 1), &event, &mut StepCounter::unlimited())
        .unwrap()
        .expect("a candidate pair");
    assert_eq!(only_ag0.degrees(), vec![Ratio::from_integer(1), Ratio::from_integer(0)]);
    // Ag1 playing 0 at t = 1 keeps the loss
    assert!(classify(&toy, &ctx, &InterventionSet::new().with(1, 1, 0), &event, &mut StepCounter::unlimited())
        .unwrap()
        .is_none());

    let one = Ratio::from_integer(1);
    assert_eq!(bf_dt(&inst, unlimited()).unwrap().assignment.degrees, vec![one, one]);
    let sim = Simulator::new(&toy, &ctx);
    assert_eq!(oracle_assignment(&enumerate(&toy, &sim, &event, 4), 2), vec![one, one]);
}

#[test]
fn witness_slots_have_altered_information() {
    let toy = Toy::new(ToyConfig::default());
    let ctx = toy_setting(&toy);
    let event = toy.outcome_event();
    let sim = Simulator::new(&toy, &ctx);
    let factual = sim.factual().unwrap();
    // Ag1 at t = 0 changes the counter, so Ag0's t = 1 state differs
    let x = InterventionSet::new().with(1, 0, 1).with(0, 1, 0);
    let cf = sim.rollout(&x, &mut StepCounter::unlimited()).unwrap();
    if let Some(p) = classify_trajectories(&toy, &factual, &cf, &x, &event).unwrap() {
        assert_eq!(p.cause().len(), 1);
        assert_eq!((p.witness()[0].agent, p.witness()[0].t), (0, 1));
        assert_eq!(p.degrees(), vec![Ratio::from_integer(0), Ratio::new(1, 2)]);
    }
}

#[test]
fn empty_set_and_non_failures_are_rejected() {
    let toy = Toy::new(ToyConfig::default());
    let ctx = toy_setting(&toy);
    let event = toy.outcome_event();
    let f = Simulator::new(&toy, &ctx).factual().unwrap();
    assert!(matches!(
        classify_trajectories(&toy, &f, &f, &InterventionSet::new(), &event),
        Err(CausalityError::Contract(_))
    ));
    let never: Event<Toy> = Event::not(Event::agents_lose());
    assert!(matches!(Instance::new(&toy, &ctx, &never), Err(CausalityError::NotAFailure)));
}

/// Every searcher against the direct enumerator on `n` losing episodes.
fn agree<M: DecPomdpModel<Prob = f64>>(model: &M, n: usize, seed: u64) {
    let event = model.outcome_event();
    let found = ramcts::harness::generate_losing_trajectories(model, n, seed, Default::default()).unwrap();
    for (k, (_, ctx)) in found.iter().enumerate() {
        let inst = Instance::new(model, ctx, &event).unwrap();
        let oracle = oracle_assignment(&enumerate(model, &Simulator::new(model, ctx), &event, 4), model.num_agents());
        let dt = bf_dt(&inst, unlimited()).unwrap();
        assert_eq!(dt.assignment.degrees, oracle, "bf-dt on instance {k}");
        assert_eq!(bf_st(&inst, unlimited(), false).unwrap().assignment.degrees, oracle, "bf-st on {k}");
        assert_eq!(bf_st(&inst, unlimited(), true).unwrap().assignment.degrees, oracle, "bf-st-prun on {k}");
        let mc = search::<M, Exact>(&inst, MctsParams { budget: dt.steps, seed: k as u64, ..MctsParams::default() });
        assert_eq!(mc.unwrap().assignment.degrees, oracle, "ra-mcts on {k}");
        let rn = random_search(&inst, MctsParams { budget: 100 * dt.steps.max(10), seed: k as u64, ..MctsParams::default() });
        assert_eq!(rn.unwrap().assignment.degrees, oracle, "random on {k}");
    }
}

#[test]
fn searchers_match_the_enumerator_on_small_games() {
    agree(&Toy::new(ToyConfig { horizon: 3, actions: 3, goal: 6 }), 10, 1);
    agree(&euchre_model::<f64>(3).unwrap(), 10, 2);
    agree(&spades_model::<f64>(3).unwrap(), 10, 3);
    agree(&goofspiel_model::<f64>(GoofspielConfig::new(3)).unwrap(), 10, 4);
}

#[test]
fn smaller_size_limits_never_raise_degrees_beyond_reach() {
    // with max size 1 only singleton pairs count, each giving degree 1
    let g = goofspiel_model::<f64>(GoofspielConfig::new(4)).unwrap();
    let event = g.outcome_event();
    for (_, ctx) in ramcts::harness::generate_losing_trajectories(&g, 5, 5, Default::default()).unwrap() {
        let inst = Instance::new(&g, &ctx, &event).unwrap();
        let small = bf_dt(&inst, MctsParams { max_size: 1, ..unlimited() }).unwrap();
        for d in &small.assignment.degrees {
            assert!(*d == Ratio::from_integer(0) || *d == Ratio::from_integer(1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn toy_degrees_match_the_enumerator(seed in any::<u64>(), horizon in 1usize..4, actions in 2usize..4) {
        let toy = Toy::new(ToyConfig { horizon, actions, goal: (horizon * actions) as i64 });
        let ctx = Context::from_seed(seed);
        let event = toy.outcome_event();
        let Ok(inst) = Instance::new(&toy, &ctx, &event) else { return Ok(()) };
        let oracle = oracle_assignment(&enumerate(&toy, &Simulator::new(&toy, &ctx), &event, 4), 2);
        prop_assert_eq!(bf_st(&inst, unlimited(), true).unwrap().assignment.degrees, oracle.clone());
        prop_assert_eq!(search::<_, Exact>(&inst, unlimited()).unwrap().assignment.degrees, oracle);
    }
}
