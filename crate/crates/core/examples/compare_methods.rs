//! Runs every method on one case and prints the comparison report.
//!
//! cargo run --example compare_methods

use gridshed::milp::{ReferenceBackend, SolveOptions};
use gridshed::network::parse_case;
use gridshed::pareto::{compare_report, standard_operation, standard_point, sweep, Method};
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/square_diag.json");
const RISK: &str = include_str!("../data/corpus/square_diag_risk.json");

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();
    let backend = ReferenceBackend;
    let options = SolveOptions::tight();

    let standard = standard_operation(&network, &risk, &backend, &options).unwrap();
    let sweeps: Vec<_> = [Method::Ops, Method::Transmission, Method::Area]
        .into_iter()
        .map(|m| sweep(&network, &risk, m, None, &backend, &options).unwrap())
        .collect();
    let report = compare_report(&network, &risk, &sweeps, &standard_point(standard), false);
    println!("{}", report.to_json());
}
