//! Solves once, then re-solves with an operator pin and shows what moved.
//!
//! cargo run --example pin_and_resolve

use gridshed::milp::ReferenceBackend;
use gridshed::network::{parse_case, ComponentRef};
use gridshed::ops::{solve_ops, OpsConfig, OpsError, Pin};
use gridshed::pareto::plan_delta;
use gridshed::risk::RiskInput;

const CASE: &str = include_str!("../data/corpus/triangle.json");
const RISK: &str = include_str!("../data/corpus/triangle_risk.json");

fn main() {
    let network = parse_case(CASE).unwrap();
    let risk = RiskInput::parse(RISK)
        .unwrap()
        .build_table(&network)
        .unwrap();
    let alpha = 0.2;

    let free = solve_ops(&network, &risk, &OpsConfig::new(alpha), &ReferenceBackend).unwrap();
    println!("unpinned: {:.2} MW at risk {:.3}", free.d_tot, free.r_fire);

    let pin = Pin::force_off(ComponentRef::line(2));
    let pinned = solve_ops(
        &network,
        &risk,
        &OpsConfig::new(alpha).with_pins(vec![pin]),
        &ReferenceBackend,
    )
    .unwrap();
    println!(
        "pinned {pin}: {:.2} MW at risk {:.3}",
        pinned.d_tot, pinned.r_fire
    );
    for c in plan_delta(&free, &pinned) {
        println!("  changed: {c}");
    }

    // A de-energized bus cannot host an energized generator.
    let clash = vec![
        Pin::force_off(ComponentRef::bus(1)),
        Pin::force_on(ComponentRef::generator(1)),
    ];
    match solve_ops(
        &network,
        &risk,
        &OpsConfig::new(alpha).with_pins(clash),
        &ReferenceBackend,
    ) {
        Err(e @ OpsError::ContradictoryPins { .. }) => println!("rejected: {e}"),
        other => println!("unexpected: {other:?}"),
    }
}
