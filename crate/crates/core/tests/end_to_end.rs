use stochknap::evolver::{repair_populations, run_gsemo, run_gsemo_dynamic, Step};
use stochknap::instance::generate_uncorrelated;
use stochknap::oracle::{brute_force_best, brute_force_pareto};
use stochknap::{
    BoundSchedule, Estimator, Evaluator, EvolverConfig, Formulation, KnapsackInstance, Selection,
};

fn instance(n: usize, seed: u64) -> KnapsackInstance {
    generate_uncorrelated(n, seed, 100)
        .unwrap()
        .with_dispersion(25.0)
        .unwrap()
}

#[test]
fn converged_archives_lie_on_the_enumerated_front() {
    for (n, seed) in [(6, 1), (8, 2), (9, 3)] {
        let inst = instance(n, seed);
        let bound = inst.base_capacity();
        for formulation in [Formulation::Static2D, Formulation::Static3D] {
            let front = brute_force_pareto(&inst, formulation, bound).unwrap();
            for selection in [Selection::Uniform, Selection::SlidingWindow] {
                let cfg = EvolverConfig::new(200_000, selection, formulation, seed);
                let out = run_gsemo(&inst, &cfg, &mut []).unwrap();
                for m in out.archive.iter() {
                    assert!(
                        front.contains(&m.objectives),
                        "n={n} {selection} {}: {:?} off the front",
                        formulation.label(),
                        m.objectives
                    );
                }
                // every front point is reached
                assert_eq!(out.archive.len(), front.len());
                let best = brute_force_best(&inst, bound, 0.01, Estimator::Hoef).unwrap();
                let got = out.trace.final_best(0.01, Estimator::Hoef).unwrap();
                assert!((got - best).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn observers_do_not_change_the_run() {
    let inst = instance(40, 5);
    let schedule = BoundSchedule::new(inst.base_capacity(), 500, 200, 9).unwrap();
    for selection in [Selection::Uniform, Selection::SlidingWindow] {
        let cfg = EvolverConfig::new(20_000, selection, Formulation::Dyn3D { gamma: 200 }, 3);
        let plain = run_gsemo_dynamic(&inst, &cfg, &schedule, &mut []).unwrap();
        let mut seen = 0u64;
        let mut count = |_: &Step<'_>| seen += 1;
        let watched = run_gsemo_dynamic(&inst, &cfg, &schedule, &mut [&mut count]).unwrap();
        assert_eq!(plain.trace, watched.trace);
        assert_eq!(seen, 20_000);
    }
}

#[test]
fn repair_at_the_same_bound_is_a_no_op_and_full_rebuild_agrees() {
    let inst = instance(30, 7);
    let gamma = 150;
    let formulation = Formulation::Dyn2D { gamma };
    let schedule = BoundSchedule::new(inst.base_capacity(), 400, gamma, 5).unwrap();
    let cfg = EvolverConfig::new(6_000, Selection::Uniform, formulation, 1);
    let state = run_gsemo_dynamic(&inst, &cfg, &schedule, &mut []).unwrap().state;
    let evaluator = Evaluator::new(&inst, formulation);

    let same = repair_populations(state.clone(), &evaluator, state.bound);
    assert_eq!(same.s1.members(), state.s1.members());
    assert_eq!(same.s2.members(), state.s2.members());

    for new_bound in [state.bound - 100, state.bound + 40, state.bound + 400] {
        let repaired = repair_populations(state.clone(), &evaluator, new_bound);
        assert!(repaired.invariants_hold());
        assert!(repaired.s1.audit() && repaired.s2.audit());

        // reference: offer every old member afresh
        let mut fresh = stochknap::DynamicState::new(new_bound, gamma);
        for m in state.s1.iter().chain(state.s2.iter()) {
            fresh.offer(m.solution.clone(), evaluator.evaluate(&m.solution, new_bound));
        }
        let key = |a: &stochknap::evolver::Archive| {
            let mut v: Vec<_> = a.iter().map(|m| m.objectives.values().to_vec()).collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        };
        assert_eq!(key(&repaired.s1), key(&fresh.s1));
        assert_eq!(key(&repaired.s2), key(&fresh.s2));
    }
}
