//! Threshold heuristics: which components each rule forces off, and what
//! the follow-up load-delivery solve can still serve.
//!
//! cargo run --example heuristics

use gridshed::milp::{ReferenceBackend, SolveOptions};
use gridshed::mld::{heuristic, run_heuristic_pipeline, HeuristicKind};
use gridshed::network::parse_case;
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/star.json");
const RISK: &str = include_str!("../data/corpus/star_risk.json");

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();
    let top = risk.max_line_risk();

    for kind in [HeuristicKind::Transmission, HeuristicKind::Area] {
        for threshold in [top + 1.0, top / 2.0, 0.0] {
            let forced = heuristic(&network, &risk, kind, threshold);
            let plan = run_heuristic_pipeline(
                &network,
                &risk,
                kind,
                threshold,
                &ReferenceBackend,
                &SolveOptions::default(),
            )
            .unwrap();
            println!(
                "{kind:<12} threshold {threshold:>6.2}: {:>2} forced off, serves {:>7.2} MW at risk {:.3}",
                forced.len(),
                plan.d_tot,
                plan.r_fire
            );
        }
    }
}
