//! Builds the per-component risk table and the per-area totals.
//!
//! cargo run --example risk_table

use gridshed::network::parse_case;
use gridshed::risk::{area_risk_total, RiskInput};

const CASE: &str = include_str!("../data/corpus/square_diag.json");
const RISK: &str = include_str!("../data/corpus/square_diag_risk.json");

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();

    println!("{:<12} {:>8}", "component", "risk");
    for entry in risk.entries() {
        println!("{:<12} {:>8.3}", entry.component.to_string(), entry.value);
    }
    for area in network.areas() {
        println!(
            "area {} ({}): {:.3}",
            area.id,
            area.name,
            area_risk_total(&risk, &network, area.id).unwrap()
        );
    }
    println!(
        "total: {:.3}, largest line: {:.3}",
        risk.total(),
        risk.max_line_risk()
    );
}
