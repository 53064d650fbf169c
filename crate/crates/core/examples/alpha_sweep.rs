//! Sweeps α and prints the resulting trade-off curve and its Pareto front.
//!
//! cargo run --example alpha_sweep

use gridshed::milp::{ReferenceBackend, SolveOptions};
use gridshed::network::parse_case;
use gridshed::pareto::{pareto_front, sweep, Method};
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/weighted.json");
const RISK: &str = include_str!("../data/corpus/weighted_risk.json");

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();

    let result = sweep(
        &network,
        &risk,
        Method::Ops,
        Some(&grid),
        &ReferenceBackend,
        &SolveOptions::tight(),
    )
    .unwrap();
    print!("{}", result.to_csv(false));

    println!("\nfront:");
    for p in pareto_front(&result.points) {
        println!(
            "  α = {:<5} risk {:>8.3}  load {:>8.2} MW",
            p.parameter, p.r_fire, p.d_tot
        );
    }
}
