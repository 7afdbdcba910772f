use std::time::Duration;

use amrsched_core::audit::{audit, Family};
use amrsched_core::baselines::{charger_unaware, rule_based, DispatchError, DispatchPolicy};
use amrsched_core::domain::{objective, Config, Instance, ObjectiveMode};
use amrsched_core::formulation::{build_monolithic, solve_monolithic, BuildOptions};
use amrsched_core::generate::{generate, GenParams};
use amrsched_solver::{write_lp, SolveLimits, Status};
use lp_parser_rs::problem::LpProblem;
use proptest::prelude::*;

fn lim() -> SolveLimits {
    SolveLimits::default().with_time_limit(Duration::from_secs(120))
}

fn stressed(r: usize, k: usize, m: usize, seed: u64, s0: f64) -> Instance {
    let mut inst = generate(&GenParams::new(r, k, m, seed)).unwrap();
    inst.robots.iter_mut().for_each(|rb| rb.s0 = s0);
    inst
}

#[test]
fn exported_model_parses() {
    let inst = generate(&GenParams::new(1, 2, 1, 3)).unwrap();
    let f = build_monolithic(&inst, &Config::default(), &BuildOptions::default());
    let parsed = LpProblem::parse(&write_lp(&f.model)).expect("parser accepts the model");
    assert_eq!(parsed.constraint_count(), f.model.num_rows());
    assert_eq!(parsed.variable_count(), f.model.num_vars());
}

#[test]
fn solved_schedules_audit_clean() {
    let cfg = Config::default();
    for (seed, s0) in [(0, 0.8), (1, 0.2), (2, 0.2)] {
        let inst = stressed(2, 3, 1, seed, s0);
        let (_, out) = solve_monolithic(&inst, &cfg, &BuildOptions::default(), &lim()).unwrap();
        assert_eq!(out.status, Status::Optimal);
        let rep = audit(&inst, &out.schedule, 1e-6).unwrap();
        assert!(rep.is_clean(), "seed {seed}: {}", rep.to_text());
        let lin = objective(&inst, &out.schedule, &cfg, ObjectiveMode::Linearized).unwrap();
        assert!((lin - out.objective).abs() <= 1e-6 * out.objective.abs().max(1e-9));
    }
}

#[test]
fn charger_unaware_repair_removes_overlap() {
    let inst = stressed(3, 4, 1, 4, 0.15);
    let out = charger_unaware(&inst, &Config::default(), &lim()).unwrap();
    let rep = audit(&inst, &out.repaired, 1e-6).unwrap();
    assert!(rep.worst(Family::NonOverlap).is_none(), "{}", rep.to_text());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rule_based_plans_audit_clean(seed in 0u64..10_000, r in 1usize..4, k in 1usize..9, m in 1usize..3, s0 in 0.15f64..0.9) {
        let inst = stressed(r, k, m, seed, s0);
        match rule_based(&inst, &DispatchPolicy::default()) {
            Ok(s) => {
                let rep = audit(&inst, &s, 1e-6).unwrap();
                prop_assert!(rep.is_clean(), "{}", rep.to_text());
                prop_assert_eq!(s.tasks.len(), k);
            }
            Err(DispatchError::Unservable { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
