//! Reader for the subset of MATPOWER case files this crate consumes.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch` are mandatory.
//! Two optional extension tables carry geography:
//!
//! * `mpc.bus_coord`, rows of `bus_id lat lon`;
//! * `mpc.branch_length_km`, one row per `mpc.branch` row.
//!
//! Everything else is skipped and reported in [`MatpowerCase::warnings`].

use std::collections::{BTreeSet, HashMap};

use super::{Area, Bus, CaseError, Generator, Line, Load, Network, NetworkData};

/// Voltage assumed for branches whose from-bus has no base kV.
pub const FALLBACK_BASE_KV: f64 = 230.0;

#[derive(Debug, Clone)]
pub struct MatpowerCase {
    pub network: Network,
    pub warnings: Vec<String>,
}

enum Value<'a> {
    Matrix(&'a str),
    Scalar(&'a str),
    Cell,
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut quoted = false;
        let mut end = line.len();
        for (i, ch) in line.char_indices() {
            match ch {
                '\'' => quoted = !quoted,
                '%' if !quoted => {
                    end = i;
                    break;
                }
                _ => {}
            }
        }
        out.push_str(&line[..end]);
        out.push('\n');
    }
    out
}

fn assignments(text: &str) -> Result<Vec<(&str, Value<'_>)>, CaseError> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find("mpc.") {
        let after = &rest[pos + 4..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        let name = &after[..name_len];
        let tail = after[name_len..].trim_start();
        let Some(tail) = tail.strip_prefix('=') else {
            rest = &after[name_len..];
            continue;
        };
        let tail = tail.trim_start();
        let (value, consumed) = if let Some(body) = tail.strip_prefix('[') {
            let close = body
                .find(']')
                .ok_or_else(|| CaseError::Malformed(format!("unterminated matrix `mpc.{name}`")))?;
            (Value::Matrix(&body[..close]), 1 + close + 1)
        } else if let Some(body) = tail.strip_prefix('{') {
            let close = body.find('}').ok_or_else(|| {
                CaseError::Malformed(format!("unterminated cell array `mpc.{name}`"))
            })?;
            (Value::Cell, 1 + close + 1)
        } else {
            let end = tail.find([';', '\n']).unwrap_or(tail.len());
            (Value::Scalar(tail[..end].trim()), end)
        };
        out.push((name, value));
        rest = &tail[consumed..];
    }
    Ok(out)
}

fn parse_matrix(name: &str, body: &str) -> Result<Vec<Vec<f64>>, CaseError> {
    let mut rows = Vec::new();
    for row in body.split([';', '\n']) {
        let cells: Vec<&str> = row
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cells.is_empty() {
            continue;
        }
        let parsed = cells
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    CaseError::Malformed(format!("`mpc.{name}`: `{c}` is not a number"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(parsed);
    }
    Ok(rows)
}

fn require_columns(name: &str, rows: &[Vec<f64>], min: usize) -> Result<(), CaseError> {
    match rows.iter().position(|r| r.len() < min) {
        Some(i) => Err(CaseError::Malformed(format!(
            "`mpc.{name}` row {} has {} columns, need at least {min}",
            i + 1,
            rows[i].len()
        ))),
        None => Ok(()),
    }
}

fn as_id(name: &str, v: f64) -> Result<u32, CaseError> {
    if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(CaseError::Malformed(format!(
            "`mpc.{name}`: `{v}` is not a valid id"
        )))
    }
}

/// Parses a MATPOWER case body. Out-of-service generators and branches are
/// dropped; generator and line ids are their 1-based row numbers, load ids
/// equal their bus id.
pub fn parse_matpower_subset(text: &str) -> Result<MatpowerCase, CaseError> {
    let clean = strip_comments(text);
    let mut warnings = Vec::new();
    let mut base_mva = None;
    let mut tables: HashMap<&str, Vec<Vec<f64>>> = HashMap::new();

    for (name, value) in assignments(&clean)? {
        match (name, value) {
            ("version", _) => {}
            ("baseMVA", Value::Scalar(s)) => {
                base_mva = Some(s.parse::<f64>().map_err(|_| {
                    CaseError::Malformed(format!("`mpc.baseMVA`: `{s}` is not a number"))
                })?);
            }
            ("bus" | "gen" | "branch" | "bus_coord" | "branch_length_km", Value::Matrix(body)) => {
                tables.insert(name, parse_matrix(name, body)?);
            }
            ("dcline", _) => {
                warnings.push("`mpc.dcline` ignored: HVDC links are not modeled".to_string())
            }
            (other, _) => warnings.push(format!("`mpc.{other}` ignored: unsupported field")),
        }
    }

    let base_mva = base_mva.ok_or_else(|| CaseError::Malformed("missing `mpc.baseMVA`".into()))?;
    let mut take = |name: &str| {
        tables
            .remove(name)
            .ok_or_else(|| CaseError::Malformed(format!("missing mandatory matrix `mpc.{name}`")))
    };
    let bus_rows = take("bus")?;
    let gen_rows = take("gen")?;
    let branch_rows = take("branch")?;
    let coord_rows = tables.remove("bus_coord").unwrap_or_default();
    let length_rows = tables.remove("branch_length_km");
    require_columns("bus", &bus_rows, 10)?;
    require_columns("gen", &gen_rows, 10)?;
    require_columns("branch", &branch_rows, 11)?;
    require_columns("bus_coord", &coord_rows, 3)?;

    let mut coords = HashMap::new();
    for row in &coord_rows {
        coords.insert(as_id("bus_coord", row[0])?, (row[1], row[2]));
    }

    let mut area_ids = BTreeSet::new();
    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut loads = Vec::new();
    let mut base_kv = HashMap::new();
    for row in &bus_rows {
        let id = as_id("bus", row[0])?;
        let area_id = as_id("bus", row[6])?;
        area_ids.insert(area_id);
        buses.push(Bus {
            id,
            name: format!("bus {id}"),
            coord: coords.remove(&id),
            area_id,
        });
        base_kv.insert(id, row[9]);
        let pd = row[2];
        if pd > 0.0 {
            loads.push(Load {
                id,
                bus: id,
                demand_mw: pd,
                weight: 1.0,
            });
        } else if pd < 0.0 {
            warnings.push(format!("bus {id}: negative demand {pd} MW ignored"));
        }
    }
    for id in coords.keys().collect::<BTreeSet<_>>() {
        warnings.push(format!("`mpc.bus_coord` row for unknown bus {id} ignored"));
    }

    let mut generators = Vec::new();
    for (i, row) in gen_rows.iter().enumerate() {
        let id = i as u32 + 1;
        if row[7] <= 0.0 {
            warnings.push(format!("generator {id} is out of service and was dropped"));
            continue;
        }
        let mut p_min = row[9];
        if p_min < 0.0 {
            warnings.push(format!(
                "generator {id}: negative p_min {p_min} MW clamped to 0"
            ));
            p_min = 0.0;
        }
        generators.push(Generator {
            id,
            bus: as_id("gen", row[0])?,
            p_min_mw: p_min,
            p_max_mw: row[8],
        });
    }
    let fallback_limit = generators.iter().map(|g| g.p_max_mw).sum::<f64>().max(1.0);

    if let Some(rows) = &length_rows {
        require_columns("branch_length_km", rows, 1)?;
        if rows.len() != branch_rows.len() {
            return Err(CaseError::Malformed(format!(
                "`mpc.branch_length_km` has {} rows, `mpc.branch` has {}",
                rows.len(),
                branch_rows.len()
            )));
        }
    }

    let mut lines = Vec::new();
    for (i, row) in branch_rows.iter().enumerate() {
        let id = i as u32 + 1;
        if row[10] <= 0.0 {
            warnings.push(format!("branch {id} is out of service and was dropped"));
            continue;
        }
        let x = row[3];
        if x == 0.0 {
            return Err(CaseError::Malformed(format!(
                "branch {id}: zero reactance gives infinite susceptance"
            )));
        }
        let from_bus = as_id("branch", row[0])?;
        let mut limit = row[5];
        if limit <= 0.0 {
            warnings.push(format!(
                "branch {id}: rate A of {limit} means unlimited; using {fallback_limit} MW"
            ));
            limit = fallback_limit;
        }
        let mut kv = base_kv.get(&from_bus).copied().unwrap_or(0.0);
        if kv <= 0.0 {
            warnings.push(format!(
                "branch {id}: no base kV at bus {from_bus}; assuming {FALLBACK_BASE_KV} kV"
            ));
            kv = FALLBACK_BASE_KV;
        }
        lines.push(Line {
            id,
            from_bus,
            to_bus: as_id("branch", row[1])?,
            susceptance_pu: 1.0 / x,
            thermal_limit_mw: limit,
            voltage_kv: kv,
            length_km: length_rows.as_ref().map(|rows| rows[i][0]),
        });
    }

    let areas = area_ids
        .into_iter()
        .map(|id| Area {
            id,
            name: format!("area {id}"),
        })
        .collect();
    let network = Network::from_data(NetworkData {
        base_mva,
        areas,
        buses,
        lines,
        generators,
        loads,
    })?;
    Ok(MatpowerCase { network, warnings })
}
