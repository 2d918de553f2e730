use num_rational::Ratio;
use proptest::prelude::*;
use ramcts::baselines::bf_st;
use ramcts::envs::{euchre_model, goofspiel_model, GoofspielConfig};
use ramcts::harness::{
    exact_reference, generate_losing_trajectories, lower_bound_reference, performance_profile, poison_and_generate,
    step_grid, GenerationLimits, RunCurve, POISONED_PER_AGENT,
};
use ramcts::mcts::MctsParams;
use ramcts::scm::{Context, DecPomdpModel, Simulator};
use ramcts::search_tree::Instance;

#[test]
fn generation_is_deterministic_and_losing() {
    let e = euchre_model::<f64>(5).unwrap();
    let a = generate_losing_trajectories(&e, 8, 21, GenerationLimits::default()).unwrap();
    let b = generate_losing_trajectories(&e, 8, 21, GenerationLimits::default()).unwrap();
    assert_eq!(a.len(), 8);
    for ((ta, ca), (tb, cb)) in a.iter().zip(&b) {
        assert!(ta == tb);
        assert_eq!(ca.seed(), cb.seed());
        assert!(ta.outcome().agents_lose());
    }
}

#[test]
fn euchre_loses_sometimes_but_not_always() {
    let e = euchre_model::<f64>(5).unwrap();
    let n = 10_000;
    let losses = (0..n)
        .filter(|&s| Simulator::new(&e, &Context::from_seed(s)).factual().unwrap().outcome().agents_lose())
        .count();
    assert!(losses > 0 && losses < n as usize, "{losses}/{n}");
}

#[test]
fn generation_gives_up_after_its_attempts() {
    let e = euchre_model::<f64>(5).unwrap();
    let err = generate_losing_trajectories(&e, 1_000, 1, GenerationLimits { max_attempts: 10 }).unwrap_err();
    assert!(err.is_generation_failure());
}

#[test]
fn poisoned_instances_are_clean_wins_turned_into_losses() {
    let g = goofspiel_model::<f64>(GoofspielConfig::new(7)).unwrap();
    for seed in 0..5 {
        let p = poison_and_generate(&g, seed, 100_000).unwrap();
        let clean = Simulator::new(&g, &p.context).factual().unwrap();
        assert!(clean.outcome().agents > clean.outcome().opponents);
        assert!(p.trajectory.outcome().agents_lose());
        assert!(Simulator::new(&p.model, &p.context).factual().unwrap() == p.trajectory);
        for i in 0..g.num_agents() {
            assert!(p.model.poisoned[i].len() <= POISONED_PER_AGENT);
            assert!(p.slots.iter().filter(|k| k.agent == i).count() <= POISONED_PER_AGENT);
        }
        let decisions = p.trajectory.decision_slots();
        assert!(p.slots.iter().all(|k| decisions.contains(&(k.agent, k.t))));
    }
}

#[test]
fn lower_bounds_never_exceed_the_exact_reference() {
    let g = goofspiel_model::<f64>(GoofspielConfig::new(5)).unwrap();
    for seed in 0..5 {
        let p = poison_and_generate(&g, seed, 100_000).unwrap();
        let event = p.model.outcome_event();
        let inst = Instance::new(&p.model, &p.context, &event).unwrap();
        let lower = lower_bound_reference(&inst, &p.slots, 4).unwrap();
        let exact = exact_reference(&inst, 4).unwrap();
        for (l, e) in lower.degrees.iter().zip(&exact.degrees) {
            assert!(l <= e);
        }
    }
}

#[test]
fn references_agree_across_brute_force_methods() {
    let e = euchre_model::<f64>(4).unwrap();
    let event = e.outcome_event();
    for (_, ctx) in generate_losing_trajectories(&e, 5, 22, GenerationLimits::default()).unwrap() {
        let inst = Instance::new(&e, &ctx, &event).unwrap();
        let unlimited = MctsParams { budget: u64::MAX, ..MctsParams::default() };
        assert_eq!(exact_reference(&inst, 4).unwrap(), bf_st(&inst, unlimited, true).unwrap().assignment);
        assert!(exact_reference(&inst, 4).unwrap().degrees.iter().all(|d| *d >= Ratio::from_integer(0)));
    }
}

fn curve_strategy() -> impl Strategy<Value = Vec<RunCurve>> {
    let points = prop::collection::vec((1u64..20_000, 0.0f64..=1.0), 0..6).prop_map(|mut v| {
        v.sort_by_key(|p| p.0);
        // errors only shrink along a run
        for i in 1..v.len() {
            v[i].1 = v[i].1.min(v[i - 1].1);
        }
        v
    });
    prop::collection::vec(points, 1..8).prop_map(|ps| {
        ps.into_iter()
            .enumerate()
            .map(|(k, points)| RunCurve { trajectory_id: k % 3, method: "m".into(), seed: k as u64, points })
            .collect()
    })
}

proptest! {
    #[test]
    fn profiles_are_monotone(curves in curve_strategy()) {
        let grid = step_grid(20_000);
        let table = performance_profile(&curves, &[0.0, 0.1, 0.25], &grid);
        for d in [0.0, 0.1, 0.25] {
            let rows = table.curve("m", d);
            prop_assert_eq!(rows.len(), grid.len());
            for w in rows.windows(2) {
                prop_assert!(w[0].fraction <= w[1].fraction + 1e-12);
            }
            for r in &rows {
                prop_assert!((0.0..=1.0).contains(&r.fraction));
                prop_assert!(r.std >= 0.0);
            }
        }
        // looser thresholds are easier to meet
        let tight = table.curve("m", 0.0);
        let loose = table.curve("m", 0.25);
        for (a, b) in tight.iter().zip(&loose) {
            prop_assert!(a.fraction <= b.fraction + 1e-12);
        }
    }
}
