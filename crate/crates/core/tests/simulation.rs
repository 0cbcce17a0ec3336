use rayon::prelude::*;

use ctbandit_core::harness::{simulate, AlgorithmSpec, ExperimentConfig};
use ctbandit_core::lucb::run_identification;
use ctbandit_core::model::oracle_payoff;
use ctbandit_core::{run_ctsab, run_policy, CtmabConfig, CtmabPolicy, CtsabConfig, Environment, ProblemInstance};

#[test]
fn realized_oracle_payoff_matches_expectation() {
    let mut c = ExperimentConfig::new(vec![0.15], 60000.0, vec![AlgorithmSpec::Oracle]);
    c.runs = 2000;
    c.trajectory_grid = 2;
    let out = simulate(&c).unwrap();
    let end = *out.summary.algorithms[0].final_checkpoint().unwrap();
    // the independent value: mu^2 T / 4 with N* = 4500 an integer
    assert!((end.mean_payoff - 337.5).abs() <= 4.0 * end.stderr, "{end:?}");
    assert!(end.stderr > 0.0);
}

#[test]
fn traces_reconcile_with_ledger() {
    let inst = ProblemInstance::single(0.3, 1.0, 60000.0).unwrap();
    let config = CtsabConfig::new(0.05, 2.0, 0.05, 60000.0).unwrap();
    for seed in 0..5 {
        let trace = run_ctsab(&mut Environment::new(inst.clone(), seed), &config).unwrap();
        assert!(!trace.failed());
        let (a, b) = (trace.cumulative_payoff(), trace.reconstructed_payoff());
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        assert!(trace.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(trace.events.last().unwrap().time <= 60000.0);
    }
}

#[test]
fn lucb_is_reliable_at_small_delta() {
    let inst = ProblemInstance::new(vec![0.5, 0.35], 1.0, 1e12).unwrap();
    let correct: usize = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let id = run_identification(&mut Environment::new(inst.clone(), seed), 0.01, 1.0, 0.0, 1e12).unwrap();
            usize::from(!id.truncated && id.best_arm == 0)
        })
        .sum();
    assert!(correct >= 990, "{correct}/1000");
}

#[test]
fn easy_two_arm_instance_reaches_exploit_early() {
    let horizon = 60000.0;
    let inst = ProblemInstance::new(vec![0.75, 0.25], 1.0, horizon).unwrap();
    let config = CtmabConfig::new(0.05, 2.0, 0.05, None, horizon).unwrap();
    let early: usize = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut policy = CtmabPolicy::new(config, 2).unwrap();
            run_policy(&mut policy, &mut Environment::new(inst.clone(), seed), horizon).unwrap();
            let r = policy.report();
            usize::from(r.identified_arm == Some(0) && r.identification_end.is_some_and(|t| t < horizon / 2.0))
        })
        .sum();
    assert!(early >= 190, "{early}/200");
}

#[test]
fn algorithms_share_reward_streams() {
    // same seed, same arm: identical draws regardless of which policy asks
    let inst = ProblemInstance::new(vec![0.4, 0.2], 1.0, 100.0).unwrap();
    let mut a = Environment::new(inst.clone(), 5);
    let mut b = Environment::new(inst, 5);
    use ctbandit_core::Bandit;
    let xs: Vec<u8> = (0..200).map(|_| a.draw_reward(0).unwrap()).collect();
    let ys: Vec<u8> = (0..200).map(|_| b.draw_reward(0).unwrap()).collect();
    assert_eq!(xs, ys);
}

#[test]
fn ctsab_regret_positive_and_finite() {
    let mut c = ExperimentConfig::new(vec![0.3], 60000.0, vec![AlgorithmSpec::Ctsab]);
    c.runs = 10;
    let out = simulate(&c).unwrap();
    let a = &out.summary.algorithms[0];
    assert_eq!((a.failed_runs, a.errored_runs), (0, 0));
    assert!(a.regret_at_horizon > 0.0 && a.regret_at_horizon < 1e6);
    assert_eq!(out.oracle_payoff, oracle_payoff(&c.instance().unwrap()));
}
