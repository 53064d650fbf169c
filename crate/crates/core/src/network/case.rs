//! Canonical case documents: versioned JSON with one array per component kind.

use serde::{Deserialize, Serialize};

use super::{Area, Bus, CaseError, Generator, Line, Load, Network, NetworkData};

pub const CASE_FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDocument {
    format_version: u32,
    base_mva: f64,
    areas: Vec<Area>,
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    loads: Vec<Load>,
}

/// Parses and validates a canonical case document.
pub fn parse_case(text: &str) -> Result<Network, CaseError> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| CaseError::Malformed(e.to_string()))?;
    match probe.format_version {
        Some(CASE_FORMAT_VERSION) => {}
        Some(other) => return Err(CaseError::Version(other)),
        None => {
            return Err(CaseError::Malformed(
                "missing `format_version` header".into(),
            ))
        }
    }
    let doc: CaseDocument =
        serde_json::from_str(text).map_err(|e| CaseError::Malformed(e.to_string()))?;
    Network::from_data(NetworkData {
        base_mva: doc.base_mva,
        areas: doc.areas,
        buses: doc.buses,
        lines: doc.lines,
        generators: doc.generators,
        loads: doc.loads,
    })
}

/// Writes a network as a canonical case document. Output is deterministic and
/// floats round-trip exactly through [`parse_case`].
pub fn serialize_case(network: &Network) -> String {
    let data = network.data();
    let doc = CaseDocument {
        format_version: CASE_FORMAT_VERSION,
        base_mva: data.base_mva,
        areas: data.areas.clone(),
        buses: data.buses.clone(),
        lines: data.lines.clone(),
        generators: data.generators.clone(),
        loads: data.loads.clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("case documents always serialize");
    out.push('\n');
    out
}
