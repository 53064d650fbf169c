mod common;

use std::collections::BTreeSet;

use common::{binary_count, corpus, enumerate};
use gridshed::milp::{ReferenceBackend, SolveOptions};
use gridshed::mld::{solve_mld, ForcedOffSet};
use gridshed::network::ComponentRef;
use gridshed::ops::{evaluate_plan, solve_ops, OpsConfig};

const TOL: f64 = 1e-6;
const ALPHAS: [f64; 6] = [0.0, 0.02, 0.1, 0.5, 0.9, 1.0];

#[test]
fn corpus_has_enough_small_cases() {
    let small: Vec<_> = corpus()
        .into_iter()
        .filter(|i| binary_count(&i.network) <= 12)
        .map(|i| i.name)
        .collect();
    assert!(small.len() >= 10, "{small:?}");
    assert!(small.iter().any(|n| n == "triangle"));
    assert!(small.iter().any(|n| n == "five_bus"));
}

#[test]
fn ops_matches_enumeration() {
    for inst in corpus()
        .into_iter()
        .filter(|i| binary_count(&i.network) <= 12)
    {
        for alpha in ALPHAS {
            let config = OpsConfig::new(alpha).with_options(SolveOptions::tight());
            let plan = solve_ops(&inst.network, &inst.risk, &config, &ReferenceBackend).unwrap();
            let oracle = enumerate(&inst.network, &inst.risk, alpha, &BTreeSet::new());
            assert!(
                (plan.objective - oracle.objective).abs() <= TOL,
                "{} α={alpha}: solver {} oracle {}",
                inst.name,
                plan.objective,
                oracle.objective
            );
        }
    }
}

#[test]
fn mld_matches_enumeration_with_forced_lines() {
    for inst in corpus()
        .into_iter()
        .filter(|i| binary_count(&i.network) <= 12)
    {
        let first_line = inst.network.lines()[0].id;
        let cases = [BTreeSet::new(), BTreeSet::from([('l', first_line)])];
        for forced in cases {
            let set = ForcedOffSet::new(
                &inst.network,
                forced.iter().map(|&(_, id)| ComponentRef::line(id)),
            )
            .unwrap();
            let plan = solve_mld(
                &inst.network,
                &inst.risk,
                &set,
                &ReferenceBackend,
                &SolveOptions::tight(),
            )
            .unwrap();
            let oracle = enumerate(&inst.network, &inst.risk, 0.0, &forced);
            assert!(
                (plan.objective - oracle.objective).abs() <= TOL,
                "{} forced {forced:?}: solver {} oracle {}",
                inst.name,
                plan.objective,
                oracle.objective
            );
            assert!(plan.lines[0].on == forced.is_empty() || !plan.lines[0].on);
        }
    }
}

#[test]
fn corpus_plans_pass_the_audit() {
    for inst in corpus() {
        for alpha in [0.0, 0.3, 1.0] {
            let config = OpsConfig::new(alpha).with_options(SolveOptions::tight());
            let plan = solve_ops(&inst.network, &inst.risk, &config, &ReferenceBackend).unwrap();
            let ev = evaluate_plan(&inst.network, &inst.risk, &plan).unwrap();
            assert!(
                ev.is_feasible(),
                "{} α={alpha}: {:?}",
                inst.name,
                ev.violations
            );
            assert!(ev.max_balance_residual_mw <= TOL && ev.max_limit_violation_mw <= TOL);
        }
    }
}

#[cfg(feature = "highs")]
#[test]
fn backends_agree_on_corpus() {
    use gridshed::milp::HighsBackend;
    for inst in corpus() {
        for alpha in [0.0, 0.05, 0.5, 1.0] {
            let config = OpsConfig::new(alpha).with_options(SolveOptions::tight());
            let a = solve_ops(&inst.network, &inst.risk, &config, &ReferenceBackend).unwrap();
            let b = solve_ops(&inst.network, &inst.risk, &config, &HighsBackend).unwrap();
            assert!(
                (a.objective - b.objective).abs() <= TOL,
                "{} α={alpha}: {} vs {}",
                inst.name,
                a.objective,
                b.objective
            );
        }
    }
}
