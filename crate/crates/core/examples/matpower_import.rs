//! Imports a MATPOWER case, prints the import warnings, and writes the
//! native JSON form.
//!
//! cargo run --example matpower_import -- [case.m]

use gridshed::network::{parse_matpower_subset, serialize_case};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/corpus/case14.m").to_string()
    });
    let text = std::fs::read_to_string(&path).expect("readable MATPOWER file");
    let case = parse_matpower_subset(&text).unwrap_or_else(|e| panic!("{path}: {e}"));
    for w in &case.warnings {
        eprintln!("warning: {w}");
    }
    let network = case.network;
    eprintln!(
        "{} buses, {} lines, {} generators, {} loads",
        network.buses().len(),
        network.lines().len(),
        network.generators().len(),
        network.loads().len()
    );
    print!("{}", serialize_case(&network));
}
