//! Solves the shut-off problem at one α and audits the result.
//!
//! cargo run --example solve_ops -- [alpha]

use gridshed::milp::ReferenceBackend;
use gridshed::network::parse_case;
use gridshed::ops::{evaluate_plan, solve_ops, OpsConfig};
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/five_bus.json");
const RISK: &str = include_str!("../data/corpus/five_bus_risk.json");

fn main() {
    let alpha: f64 = std::env::args()
        .nth(1)
        .map_or(0.3, |a| a.parse().expect("alpha in [0, 1]"));
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();

    let plan = solve_ops(&network, &risk, &OpsConfig::new(alpha), &ReferenceBackend).unwrap();
    println!(
        "α = {alpha}: serves {:.2} MW at risk {:.3} ({})",
        plan.d_tot, plan.r_fire, plan.status
    );
    for c in plan.shut_off() {
        println!("  off: {c}");
    }

    let audit = evaluate_plan(&network, &risk, &plan).unwrap();
    println!(
        "audit: feasible = {}, balance residual {:.1e} MW, {} islands",
        audit.is_feasible(),
        audit.max_balance_residual_mw,
        audit.islands.len()
    );
}
