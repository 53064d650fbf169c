//! Plugs a custom MILP backend into the registry. This one wraps the
//! reference solver and counts the problems it sees.
//!
//! cargo run --example custom_backend

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use gridshed::milp::{
    BackendRegistry, MilpBackend, MilpProblem, MilpSolution, ReferenceBackend, SolveOptions,
};
use gridshed::network::parse_case;
use gridshed::ops::{solve_ops, OpsConfig};
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/chain.json");
const RISK: &str = include_str!("../data/corpus/chain_risk.json");

#[derive(Default)]
struct Counting {
    calls: AtomicUsize,
}

impl MilpBackend for Counting {
    fn name(&self) -> &str {
        "counting"
    }

    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> MilpSolution {
        self.calls.fetch_add(1, Ordering::Relaxed);
        println!(
            "  solving {} ({} binaries)",
            problem.name,
            problem.binary_count()
        );
        let mut solution = ReferenceBackend.solve(problem, options);
        solution.stats.backend = self.name().to_string();
        solution
    }
}

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();

    let counting = Arc::new(Counting::default());
    let mut registry = BackendRegistry::with_defaults();
    registry.register("counting", counting.clone());
    println!("registered: {:?}", registry.names());

    let backend = registry.get("counting").unwrap();
    for alpha in [0.0, 0.5, 1.0] {
        let plan = solve_ops(&network, &risk, &OpsConfig::new(alpha), backend.as_ref()).unwrap();
        println!(
            "α = {alpha}: {:.2} MW at risk {:.3} via {}",
            plan.d_tot, plan.r_fire, plan.solver.backend
        );
    }
    println!("{} problems solved", counting.calls.load(Ordering::Relaxed));
}
