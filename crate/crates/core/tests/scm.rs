use proptest::prelude::*;
use ramcts::envs::{euchre_model, goofspiel_model, spades_model, GoofspielConfig, ToyConfig};
use ramcts::scm::posterior::posterior_sample_context;
use ramcts::scm::{Context, DecPomdpModel, InterventionSet, Simulator, StepCounter};
use ramcts::Toy;

fn check_replay<M: DecPomdpModel>(model: &M, seed: u64, post_seed: u64) -> Result<(), TestCaseError> {
    let ctx = Context::from_seed(seed);
    let sim = Simulator::new(model, &ctx);
    let f = sim.factual().unwrap();
    prop_assert!(f == sim.factual().unwrap());
    let post = posterior_sample_context(model, &f, post_seed).unwrap();
    prop_assert!(Simulator::new(model, &post).factual().unwrap() == f);
    Ok(())
}

/// Forcing the factual action at every decision slot reproduces the episode.
fn check_no_op<M: DecPomdpModel>(model: &M, seed: u64) -> Result<(), TestCaseError> {
    let ctx = Context::from_seed(seed);
    let sim = Simulator::new(model, &ctx);
    let f = sim.factual().unwrap();
    let mut x = InterventionSet::new();
    for (a, t) in f.decision_slots() {
        x = x.with(a, t, f.action(a, t).unwrap());
    }
    let cf = sim.rollout(&x, &mut StepCounter::unlimited()).unwrap();
    prop_assert_eq!(cf.outcome(), f.outcome());
    for (a, t) in f.decision_slots() {
        prop_assert_eq!(cf.action(a, t), f.action(a, t));
    }
    Ok(())
}

/// An intervention at `t` leaves every earlier step untouched.
fn check_prefix<M: DecPomdpModel>(model: &M, seed: u64, pick: usize, alt: usize) -> Result<(), TestCaseError> {
    let ctx = Context::from_seed(seed);
    let sim = Simulator::new(model, &ctx);
    let f = sim.factual().unwrap();
    let slots = f.decision_slots();
    let (a, t) = slots[pick % slots.len()];
    let valid = model.valid_actions(a, f.info(a, t).unwrap());
    let act = valid[alt % valid.len()];
    let cf = sim.rollout(&InterventionSet::new().with(a, t, act), &mut StepCounter::unlimited()).unwrap();
    prop_assert_eq!(cf.action(a, t), Some(act));
    for s in 0..=t {
        prop_assert!(cf.state(s) == f.state(s));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn posterior_contexts_replay_the_observation(seed in any::<u64>(), post in any::<u64>()) {
        check_replay(&euchre_model::<f64>(5).unwrap(), seed, post)?;
        check_replay(&spades_model::<f64>(4).unwrap(), seed, post)?;
        check_replay(&goofspiel_model::<f64>(GoofspielConfig::new(6)).unwrap(), seed, post)?;
        check_replay(&Toy::new(ToyConfig::default()), seed, post)?;
    }

    #[test]
    fn factual_interventions_are_no_ops(seed in any::<u64>()) {
        check_no_op(&euchre_model::<f64>(5).unwrap(), seed)?;
        check_no_op(&spades_model::<f64>(4).unwrap(), seed)?;
        check_no_op(&goofspiel_model::<f64>(GoofspielConfig::new(6)).unwrap(), seed)?;
    }

    #[test]
    fn interventions_do_not_reach_back(seed in any::<u64>(), pick in any::<usize>(), alt in any::<usize>()) {
        check_prefix(&euchre_model::<f64>(5).unwrap(), seed, pick, alt)?;
        check_prefix(&goofspiel_model::<f64>(GoofspielConfig::new(6)).unwrap(), seed, pick, alt)?;
    }

    #[test]
    fn rollouts_charge_one_step_per_time_step(seed in any::<u64>(), limit in 1u64..20) {
        let e = euchre_model::<f64>(5).unwrap();
        let ctx = Context::from_seed(seed);
        let sim = Simulator::new(&e, &ctx);
        let mut c = StepCounter::new(limit);
        let r = sim.rollout(&InterventionSet::new(), &mut c);
        if limit >= e.horizon() as u64 {
            prop_assert!(r.is_ok());
            prop_assert_eq!(c.used(), e.horizon() as u64);
        } else {
            prop_assert!(r.is_err());
            prop_assert!(c.used() <= limit);
        }
    }
}
