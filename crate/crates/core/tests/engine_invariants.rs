mod common;

use tmrrt::assigner::Strategy;
use tmrrt::engine::{compare_runs, run, ScenarioConfig};

fn scenario(strategy: Strategy, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::load("mapA").unwrap();
    cfg.strategy = strategy;
    cfg.seed = seed;
    cfg
}

#[test]
fn tm_runs_keep_goals_apart_and_close_every_goal() {
    for seed in [1, 2, 3] {
        let cfg = scenario(Strategy::TmRrt, seed);
        let out = run(&cfg).unwrap();
        let l = &out.logs;
        let n = common::check_run_logs(
            &l.assignment_trace,
            &l.invalid,
            &l.coverage,
            cfg.tick_dt,
            cfg.filter.invalid_match_radius,
            Some(cfg.assigner.memory_epsilon),
        )
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(n > 0);
        assert!(out.metrics.exploration_duration <= cfg.max_sim_time);
    }
}

#[test]
fn baseline_runs_keep_bookkeeping_consistent() {
    let cfg = scenario(Strategy::BaselineRrt, 1);
    let out = run(&cfg).unwrap();
    let l = &out.logs;
    common::check_run_logs(&l.assignment_trace, &l.invalid, &l.coverage, cfg.tick_dt, cfg.filter.invalid_match_radius, None)
        .unwrap();
    // no deadlines on the baseline
    assert!(!l.assignment_trace.contains("deadline_expired"));
}

#[test]
fn same_seed_gives_identical_logs() {
    for strategy in [Strategy::TmRrt, Strategy::BaselineRrt] {
        let cfg = scenario(strategy, 5);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.logs.metrics, b.logs.metrics);
        assert_eq!(a.logs.trajectories, b.logs.trajectories);
        assert_eq!(a.logs.frontiers, b.logs.frontiers);
        assert_eq!(a.logs.invalid, b.logs.invalid);
        assert_eq!(a.logs.assignment_trace, b.logs.assignment_trace);
        assert_eq!(a.logs.coverage, b.logs.coverage);
        assert_eq!(a.logs.final_map, b.logs.final_map);
    }
}

#[test]
fn parallel_compare_matches_sequential() {
    let cfg = ScenarioConfig::load("mapA").unwrap();
    let (seq, runs_a) = compare_runs(&cfg, &[1, 2], 1).unwrap();
    let (par, runs_b) = compare_runs(&cfg, &[1, 2], 2).unwrap();
    assert_eq!(seq.to_csv(), par.to_csv());
    assert_eq!(runs_a.len(), 4);
    for (a, b) in runs_a.iter().zip(&runs_b) {
        assert_eq!(a.logs.assignment_trace, b.logs.assignment_trace);
    }
}
