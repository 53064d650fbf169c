//! Wildfire risk per component and for whole energization states.
//!
//! Each component has an [`Exposure`]: a list of areas it touches, with an
//! ignition factor κ and a weight (1 for point components, the number of
//! line segments for lines). Its risk is `Σ κ · weight · ρ_area`.

mod input;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ComponentKind, ComponentRef, Energization, Line, Network, StateError};

pub use input::{AreaLength, KappaOverride, LineGeography, RiskInput, RISK_FORMAT_VERSION};

pub const DEFAULT_KM_PER_SEGMENT: f64 = 10.0;

/// Lines at or above this voltage get κ = 1, lower ones κ = 2.
pub const HIGH_VOLTAGE_KV: f64 = 230.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaRisk {
    pub area_id: u32,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureTerm {
    pub area_id: u32,
    pub kappa: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub component: ComponentRef,
    pub terms: Vec<ExposureTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRisk {
    pub component: ComponentRef,
    pub value: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error("malformed risk document: {0}")]
    Malformed(String),
    #[error("unsupported risk format_version {0} (expected {RISK_FORMAT_VERSION})")]
    Version(u32),
    #[error("{line}: geography covers {got} km but the line is {expected} km long")]
    LengthMismatch {
        line: ComponentRef,
        expected: f64,
        got: f64,
    },
    #[error("{component} references unknown area {area_id}")]
    UnknownArea { component: String, area_id: u32 },
    #[error("{0} is not part of the network")]
    UnknownComponent(ComponentRef),
    #[error("{0} has no exposure and defaults are disabled")]
    Uncovered(ComponentRef),
    #[error("{0} has neither geography nor a length")]
    NoGeography(ComponentRef),
    #[error("{0} has more than one exposure")]
    DuplicateExposure(ComponentRef),
    #[error("{what} must be finite and nonnegative, got {value}")]
    Negative { what: String, value: f64 },
    #[error("km_per_segment must be positive, got {0}")]
    SegmentLength(f64),
    #[error("{component} has no exposure term in area {area_id} to override")]
    OverrideArea {
        component: ComponentRef,
        area_id: u32,
    },
    #[error("served fraction {value} of {load} is outside [0, 1]")]
    OutOfRange { load: ComponentRef, value: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

fn check_nonnegative(what: impl Into<String>, value: f64) -> Result<(), RiskError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(RiskError::Negative {
            what: what.into(),
            value,
        })
    }
}

/// κ used when no override is given.
pub fn default_kappa(kind: ComponentKind, voltage_kv: Option<f64>) -> f64 {
    match (kind, voltage_kv) {
        (ComponentKind::Line, Some(kv)) if kv < HIGH_VOLTAGE_KV => 2.0,
        _ => 1.0,
    }
}

/// Exposure of a line crossing the given areas. Lengths in the same area are
/// merged; the weight of each term is `km / km_per_segment`.
pub fn line_exposure(
    network: &Network,
    line: &Line,
    area_lengths: &[(u32, f64)],
    km_per_segment: f64,
) -> Result<Exposure, RiskError> {
    let component = ComponentRef::line(line.id);
    if !(km_per_segment.is_finite() && km_per_segment > 0.0) {
        return Err(RiskError::SegmentLength(km_per_segment));
    }
    let mut merged: Vec<(u32, f64)> = Vec::new();
    for &(area_id, km) in area_lengths {
        if network.area(area_id).is_none() {
            return Err(RiskError::UnknownArea {
                component: component.to_string(),
                area_id,
            });
        }
        check_nonnegative(format!("{component} km in area {area_id}"), km)?;
        match merged.iter_mut().find(|(a, _)| *a == area_id) {
            Some(entry) => entry.1 += km,
            None => merged.push((area_id, km)),
        }
    }
    let total: f64 = merged.iter().map(|(_, km)| km).sum();
    if let Some(expected) = line.length_km {
        if (total - expected).abs() > 1e-6 {
            return Err(RiskError::LengthMismatch {
                line: component,
                expected,
                got: total,
            });
        }
    }
    let kappa = default_kappa(ComponentKind::Line, Some(line.voltage_kv));
    let terms = merged
        .into_iter()
        .filter(|&(_, km)| km > 0.0)
        .map(|(area_id, km)| ExposureTerm {
            area_id,
            kappa,
            weight: km / km_per_segment,
        })
        .collect();
    Ok(Exposure { component, terms })
}

/// Exposure of a bus, generator or load: one term in the area of its bus.
pub fn point_exposure(network: &Network, component: ComponentRef) -> Result<Exposure, RiskError> {
    let area_id = network
        .location_area(component)
        .ok_or(RiskError::UnknownComponent(component))?;
    Ok(Exposure {
        component,
        terms: vec![ExposureTerm {
            area_id,
            kappa: default_kappa(component.kind, None),
            weight: 1.0,
        }],
    })
}

/// Exposure used for a line with no explicit geography: its length split
/// evenly between the areas of its two end buses.
pub fn default_line_exposure(
    network: &Network,
    line: &Line,
    km_per_segment: f64,
) -> Result<Exposure, RiskError> {
    let component = ComponentRef::line(line.id);
    let length = line.length_km.ok_or(RiskError::NoGeography(component))?;
    let area = |bus| {
        network
            .bus_idx(bus)
            .map(|i| network.buses()[i].area_id)
            .ok_or(RiskError::UnknownComponent(component))
    };
    let halves = [
        (area(line.from_bus)?, length / 2.0),
        (area(line.to_bus)?, length / 2.0),
    ];
    line_exposure(network, line, &halves, km_per_segment)
}

/// R_e = Σ_j κ_j · weight_j · ρ_j over the exposure's terms.
pub fn component_risk(
    exposure: &Exposure,
    area_risks: &BTreeMap<u32, f64>,
) -> Result<ComponentRisk, RiskError> {
    let mut value = 0.0;
    for term in &exposure.terms {
        let rho = area_risks
            .get(&term.area_id)
            .ok_or_else(|| RiskError::UnknownArea {
                component: exposure.component.to_string(),
                area_id: term.area_id,
            })?;
        value += term.kappa * term.weight * rho;
    }
    Ok(ComponentRisk {
        component: exposure.component,
        value,
    })
}

/// Risk of every component of one network, plus the exposures and area
/// values it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    rho: BTreeMap<u32, f64>,
    bus: Vec<f64>,
    line: Vec<f64>,
    generator: Vec<f64>,
    load: Vec<f64>,
    exposures: Vec<Exposure>,
}

/// Builds the table for `network`. Areas without an entry in `area_risks`
/// get ρ = 0. With `defaults`, components missing from `exposures` get
/// [`point_exposure`] or [`default_line_exposure`].
pub fn build_risk_table(
    network: &Network,
    area_risks: &[AreaRisk],
    exposures: &[Exposure],
    defaults: bool,
) -> Result<RiskTable, RiskError> {
    let mut rho: BTreeMap<u32, f64> = network.areas().iter().map(|a| (a.id, 0.0)).collect();
    for ar in area_risks {
        if !rho.contains_key(&ar.area_id) {
            return Err(RiskError::UnknownArea {
                component: "area_risks".into(),
                area_id: ar.area_id,
            });
        }
        check_nonnegative(format!("rho of area {}", ar.area_id), ar.rho)?;
        rho.insert(ar.area_id, ar.rho);
    }

    let mut given: BTreeMap<ComponentRef, &Exposure> = BTreeMap::new();
    for e in exposures {
        if !network.contains(e.component) {
            return Err(RiskError::UnknownComponent(e.component));
        }
        for t in &e.terms {
            check_nonnegative(format!("kappa of {}", e.component), t.kappa)?;
            check_nonnegative(format!("weight of {}", e.component), t.weight)?;
        }
        if given.insert(e.component, e).is_some() {
            return Err(RiskError::DuplicateExposure(e.component));
        }
    }

    let mut table = RiskTable {
        rho,
        bus: Vec::with_capacity(network.buses().len()),
        line: Vec::with_capacity(network.lines().len()),
        generator: Vec::with_capacity(network.generators().len()),
        load: Vec::with_capacity(network.loads().len()),
        exposures: Vec::with_capacity(network.component_count()),
    };
    for component in network.components() {
        let exposure = match given.get(&component) {
            Some(e) => (*e).clone(),
            None if !defaults => return Err(RiskError::Uncovered(component)),
            None if component.kind == ComponentKind::Line => {
                let line =
                    &network.lines()[network.line_idx(component.id).expect("listed by network")];
                default_line_exposure(network, line, DEFAULT_KM_PER_SEGMENT)?
            }
            None => point_exposure(network, component)?,
        };
        let value = component_risk(&exposure, &table.rho)?.value;
        match component.kind {
            ComponentKind::Bus => table.bus.push(value),
            ComponentKind::Line => table.line.push(value),
            ComponentKind::Generator => table.generator.push(value),
            ComponentKind::Load => table.load.push(value),
        }
        table.exposures.push(exposure);
    }
    Ok(table)
}

/// Risk split by component kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub total: f64,
    pub bus: f64,
    pub line: f64,
    pub gen: f64,
    pub load: f64,
}

impl RiskTable {
    pub fn bus_risk(&self) -> &[f64] {
        &self.bus
    }
    pub fn line_risk(&self) -> &[f64] {
        &self.line
    }
    pub fn generator_risk(&self) -> &[f64] {
        &self.generator
    }
    pub fn load_risk(&self) -> &[f64] {
        &self.load
    }

    /// ρ per area, including areas defaulted to 0.
    pub fn area_rho(&self) -> &BTreeMap<u32, f64> {
        &self.rho
    }

    /// Number of entries; always equals the network's component count.
    pub fn len(&self) -> usize {
        self.exposures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exposures.is_empty()
    }

    pub fn covers(&self, network: &Network) -> bool {
        self.bus.len() == network.buses().len()
            && self.line.len() == network.lines().len()
            && self.generator.len() == network.generators().len()
            && self.load.len() == network.loads().len()
    }

    /// Exposures in network component order.
    pub fn exposures(&self) -> &[Exposure] {
        &self.exposures
    }

    /// Every component's risk in network component order.
    pub fn entries(&self) -> Vec<ComponentRisk> {
        let values = self
            .bus
            .iter()
            .chain(&self.line)
            .chain(&self.generator)
            .chain(&self.load);
        self.exposures
            .iter()
            .zip(values)
            .map(|(e, &value)| ComponentRisk {
                component: e.component,
                value,
            })
            .collect()
    }

    pub fn value(&self, network: &Network, component: ComponentRef) -> Option<f64> {
        let i = network.index_of(component)?;
        Some(match component.kind {
            ComponentKind::Bus => self.bus[i],
            ComponentKind::Line => self.line[i],
            ComponentKind::Generator => self.generator[i],
            ComponentKind::Load => self.load[i],
        })
    }

    pub fn max_line_risk(&self) -> f64 {
        self.line.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of every component's risk, i.e. R_Fire with everything energized.
    pub fn total(&self) -> f64 {
        self.bus
            .iter()
            .chain(&self.line)
            .chain(&self.generator)
            .chain(&self.load)
            .sum()
    }

    /// Part of a component's risk that comes from one area.
    pub fn contribution(exposure: &Exposure, area_id: u32, rho: f64) -> f64 {
        exposure
            .terms
            .iter()
            .filter(|t| t.area_id == area_id)
            .map(|t| t.kappa * t.weight * rho)
            .sum()
    }

    /// Components with at least one exposure term in `area_id`.
    pub fn components_in_area(&self, area_id: u32) -> Vec<ComponentRef> {
        self.exposures
            .iter()
            .filter(|e| e.terms.iter().any(|t| t.area_id == area_id))
            .map(|e| e.component)
            .collect()
    }
}

fn check_loads(network: &Network, state: &Energization) -> Result<(), RiskError> {
    state.check_covers(network)?;
    for (d, &x) in state.load.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(RiskError::OutOfRange {
                load: ComponentRef::load(network.loads()[d].id),
                value: x,
            });
        }
    }
    Ok(())
}

/// R_Fire split by kind for one state. Loads contribute x_d · R_d.
pub fn risk_breakdown(
    network: &Network,
    table: &RiskTable,
    state: &Energization,
) -> Result<RiskBreakdown, RiskError> {
    check_loads(network, state)?;
    let on = |risks: &[f64], states: &[bool]| -> f64 {
        risks
            .iter()
            .zip(states)
            .filter(|(_, &s)| s)
            .map(|(r, _)| r)
            .sum()
    };
    let bus = on(&table.bus, &state.bus);
    let line = on(&table.line, &state.line);
    let gen = on(&table.generator, &state.generator);
    let load: f64 = table.load.iter().zip(&state.load).map(|(r, x)| r * x).sum();
    Ok(RiskBreakdown {
        total: bus + line + gen + load,
        bus,
        line,
        gen,
        load,
    })
}

/// R_Fire = Σ x_d R_d + Σ z_g R_g + Σ z_l R_l + Σ z_i R_i.
pub fn total_system_risk(
    network: &Network,
    table: &RiskTable,
    state: &Energization,
) -> Result<f64, RiskError> {
    risk_breakdown(network, table, state).map(|b| b.total)
}

/// Σ over components of the risk they carry from `area_id`. A line crossing
/// several areas counts only its terms in this one.
pub fn area_risk_total(
    table: &RiskTable,
    network: &Network,
    area_id: u32,
) -> Result<f64, RiskError> {
    if network.area(area_id).is_none() {
        return Err(RiskError::UnknownArea {
            component: "query".into(),
            area_id,
        });
    }
    let rho = table.rho.get(&area_id).copied().unwrap_or(0.0);
    Ok(table
        .exposures
        .iter()
        .map(|e| RiskTable::contribution(e, area_id, rho))
        .sum())
}
