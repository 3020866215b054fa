mod common;

use common::*;
use jtcouple::experiment::brute_force_optimum;
use jtcouple::milp::{
    export_lp, parse_lp, pipeline_model, solve_branch_and_bound, solve_pipeline, BnbOptions, MilpStatus,
    Objective, PipelineOptions,
};

#[test]
fn lp_text_round_trips_pipeline_models() {
    for seed in 0..4 {
        let net = tiny_instance(seed, 0.7);
        for objective in [Objective::SumLoad, Objective::MaxLoad] {
            let model = pipeline_model(&net, objective, &PipelineOptions::default()).unwrap();
            let text = export_lp(&model);
            let parsed = parse_lp(&text).unwrap();
            assert_eq!(export_lp(&parsed), text);
            let a = solve_branch_and_bound(&model, &BnbOptions::default()).unwrap();
            let b = solve_branch_and_bound(&parsed, &BnbOptions::default()).unwrap();
            assert_eq!(a.choice, b.choice);
            assert_eq!(a.objective_lp, b.objective_lp);
        }
    }
}

#[test]
fn branch_and_bound_matches_enumeration() {
    for seed in 20..26 {
        let net = tiny_instance(seed, 0.8);
        for lb in [false, true] {
            let opts = PipelineOptions {
                lb_constraints: lb,
                ..PipelineOptions::default()
            };
            let model = pipeline_model(&net, Objective::MaxLoad, &opts).unwrap();
            let sol = solve_branch_and_bound(&model, &BnbOptions::default()).unwrap();
            match linear_model_optimum(&model) {
                Some((_, v)) => {
                    assert_eq!(sol.status, MilpStatus::Optimal);
                    assert!((sol.objective_lp - v).abs() <= 1e-8 * v.max(1.0));
                    assert!(sol.bound <= sol.objective_lp + 1e-12);
                }
                None => assert_eq!(sol.status, MilpStatus::Infeasible),
            }
        }
    }
}

#[test]
fn pipeline_bound_never_exceeds_true_optimum() {
    for seed in 40..46 {
        let net = tiny_instance(seed, 0.85);
        for objective in [Objective::SumLoad, Objective::MaxLoad] {
            let (sol, report) = solve_pipeline(&net, objective, &PipelineOptions::default()).unwrap();
            let (_, opt) = brute_force_optimum(&net, objective).unwrap();
            assert!(sol.bound <= opt + 1e-12);
            assert!(opt <= objective.of(&report.load) + 1e-9);
            assert_eq!(sol.objective_true, Some(objective.of(&report.load)));
        }
    }
}
