//! Parses a case file, reports violations, and prints a summary.
//!
//! cargo run --example parse_and_validate -- [case.json]

use gridshed::network::{parse_case, validate, NetworkData};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/corpus/five_bus.json").to_string()
    });
    let text = std::fs::read_to_string(&path).expect("readable case file");

    let network = match parse_case(&text) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(1);
        }
    };
    println!(
        "{path}: {} buses, {} lines, {} generators, {} loads, {:.1} MW demand",
        network.buses().len(),
        network.lines().len(),
        network.generators().len(),
        network.loads().len(),
        network.total_demand_mw()
    );

    // A line pointing at a bus that does not exist is reported, not panicked on.
    let mut broken: NetworkData = network.data().clone();
    broken.lines[0].to_bus = 999;
    for v in validate(&broken) {
        println!("violation: {v}");
    }
}
