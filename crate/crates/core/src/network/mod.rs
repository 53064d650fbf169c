//! Grid description: buses, lines, generators, loads and the areas they sit in.
//!
//! A [`Network`] is immutable once built. Construction goes through
//! [`Network::from_data`], which runs [`validate`] and precomputes the
//! per-bus incidence sets used by the optimization models.

mod case;
mod islands;
mod matpower;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use case::{parse_case, serialize_case, CASE_FORMAT_VERSION};
pub use islands::{energized_islands, Energization, Island, StateError};
pub use matpower::{parse_matpower_subset, MatpowerCase};

/// Kind of grid component that can be energized or de-energized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Bus,
    Line,
    Generator,
    Load,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] = [
        ComponentKind::Bus,
        ComponentKind::Line,
        ComponentKind::Generator,
        ComponentKind::Load,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Bus => "bus",
            ComponentKind::Line => "line",
            ComponentKind::Generator => "generator",
            ComponentKind::Load => "load",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bus" => Ok(ComponentKind::Bus),
            "line" | "branch" => Ok(ComponentKind::Line),
            "generator" | "gen" => Ok(ComponentKind::Generator),
            "load" => Ok(ComponentKind::Load),
            other => Err(format!("unknown component kind `{other}`")),
        }
    }
}

/// A component identified by kind and id, e.g. `line:12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentRef {
    pub kind: ComponentKind,
    pub id: u32,
}

impl ComponentRef {
    pub fn new(kind: ComponentKind, id: u32) -> Self {
        ComponentRef { kind, id }
    }
    pub fn bus(id: u32) -> Self {
        Self::new(ComponentKind::Bus, id)
    }
    pub fn line(id: u32) -> Self {
        Self::new(ComponentKind::Line, id)
    }
    pub fn generator(id: u32) -> Self {
        Self::new(ComponentKind::Generator, id)
    }
    pub fn load(id: u32) -> Self {
        Self::new(ComponentKind::Load, id)
    }
}

impl fmt::Display for ComponentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.id)
    }
}

impl FromStr for ComponentRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, id) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `kind:id`, got `{s}`"))?;
        let kind = kind.parse()?;
        let id = id
            .parse()
            .map_err(|_| format!("invalid component id `{id}`"))?;
        Ok(ComponentRef { kind, id })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub name: String,
    /// (latitude, longitude) in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<(f64, f64)>,
    pub area_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    /// Series susceptance magnitude, 1/x in per unit.
    pub susceptance_pu: f64,
    pub thermal_limit_mw: f64,
    pub voltage_kv: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: u32,
    pub bus: u32,
    pub demand_mw: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

/// Raw, unvalidated grid data. This is what the case parsers produce and
/// what [`validate`] inspects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkData {
    pub base_mva: f64,
    pub areas: Vec<Area>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
}

/// One broken invariant, attached to the entity that breaks it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// `bus:3`, `line:7`, `area:2` or `network`.
    pub entity: String,
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.entity, self.rule, self.detail)
    }
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("malformed case document: {0}")]
    Malformed(String),
    #[error("unsupported case format_version {0} (expected {CASE_FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid network: {}", summarize(.0))]
    Invalid(Vec<Violation>),
}

fn summarize(violations: &[Violation]) -> String {
    let mut out = violations
        .iter()
        .take(5)
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if violations.len() > 5 {
        out.push_str(&format!("; and {} more", violations.len() - 5));
    }
    out
}

fn push(out: &mut Vec<Violation>, entity: impl Into<String>, rule: &str, detail: String) {
    out.push(Violation {
        entity: entity.into(),
        rule: rule.to_string(),
        detail,
    });
}

/// Checks every structural invariant of the grid description. An empty list
/// means the data can be turned into a [`Network`].
pub fn validate(data: &NetworkData) -> Vec<Violation> {
    let mut out = Vec::new();

    if !(data.base_mva.is_finite() && data.base_mva > 0.0) {
        push(
            &mut out,
            "network",
            "nonpositive_base_mva",
            format!("base_mva = {}", data.base_mva),
        );
    }

    let mut area_ids = HashSet::new();
    for area in &data.areas {
        if !area_ids.insert(area.id) {
            push(
                &mut out,
                format!("area:{}", area.id),
                "duplicate_id",
                "area id declared twice".into(),
            );
        }
    }

    let mut bus_ids = HashSet::new();
    for bus in &data.buses {
        let entity = ComponentRef::bus(bus.id).to_string();
        if !bus_ids.insert(bus.id) {
            push(
                &mut out,
                &entity,
                "duplicate_id",
                "bus id declared twice".into(),
            );
        }
        if !area_ids.contains(&bus.area_id) {
            push(
                &mut out,
                &entity,
                "dangling_area_reference",
                format!("area {} is not declared", bus.area_id),
            );
        }
        if let Some((lat, lon)) = bus.coord {
            if !(lat.is_finite() && lon.is_finite() && lat.abs() <= 90.0 && lon.abs() <= 180.0) {
                push(
                    &mut out,
                    &entity,
                    "invalid_coordinate",
                    format!("({lat}, {lon})"),
                );
            }
        }
    }

    let mut line_ids = HashSet::new();
    for line in &data.lines {
        let entity = ComponentRef::line(line.id).to_string();
        if !line_ids.insert(line.id) {
            push(
                &mut out,
                &entity,
                "duplicate_id",
                "line id declared twice".into(),
            );
        }
        for end in [line.from_bus, line.to_bus] {
            if !bus_ids.contains(&end) {
                push(
                    &mut out,
                    &entity,
                    "dangling_bus_reference",
                    format!("bus {end} does not exist"),
                );
            }
        }
        if line.from_bus == line.to_bus {
            push(
                &mut out,
                &entity,
                "self_loop",
                format!("both ends at bus {}", line.from_bus),
            );
        }
        if !(line.susceptance_pu.is_finite() && line.susceptance_pu > 0.0) {
            push(
                &mut out,
                &entity,
                "nonpositive_susceptance",
                format!("susceptance_pu = {}", line.susceptance_pu),
            );
        }
        if !(line.thermal_limit_mw.is_finite() && line.thermal_limit_mw > 0.0) {
            push(
                &mut out,
                &entity,
                "nonpositive_thermal_limit",
                format!("thermal_limit_mw = {}", line.thermal_limit_mw),
            );
        }
        if !(line.voltage_kv.is_finite() && line.voltage_kv > 0.0) {
            push(
                &mut out,
                &entity,
                "nonpositive_voltage",
                format!("voltage_kv = {}", line.voltage_kv),
            );
        }
        if let Some(len) = line.length_km {
            if !(len.is_finite() && len >= 0.0) {
                push(
                    &mut out,
                    &entity,
                    "negative_length",
                    format!("length_km = {len}"),
                );
            }
        }
    }

    let mut gen_ids = HashSet::new();
    for gen in &data.generators {
        let entity = ComponentRef::generator(gen.id).to_string();
        if !gen_ids.insert(gen.id) {
            push(
                &mut out,
                &entity,
                "duplicate_id",
                "generator id declared twice".into(),
            );
        }
        if !bus_ids.contains(&gen.bus) {
            push(
                &mut out,
                &entity,
                "dangling_bus_reference",
                format!("bus {} does not exist", gen.bus),
            );
        }
        let finite = gen.p_min_mw.is_finite() && gen.p_max_mw.is_finite();
        if !finite || gen.p_min_mw < 0.0 || gen.p_min_mw > gen.p_max_mw {
            push(
                &mut out,
                &entity,
                "generation_limits",
                format!(
                    "need 0 <= p_min <= p_max, got [{}, {}]",
                    gen.p_min_mw, gen.p_max_mw
                ),
            );
        }
    }

    let mut load_ids = HashSet::new();
    for load in &data.loads {
        let entity = ComponentRef::load(load.id).to_string();
        if !load_ids.insert(load.id) {
            push(
                &mut out,
                &entity,
                "duplicate_id",
                "load id declared twice".into(),
            );
        }
        if !bus_ids.contains(&load.bus) {
            push(
                &mut out,
                &entity,
                "dangling_bus_reference",
                format!("bus {} does not exist", load.bus),
            );
        }
        if !(load.demand_mw.is_finite() && load.demand_mw >= 0.0) {
            push(
                &mut out,
                &entity,
                "negative_demand",
                format!("demand_mw = {}", load.demand_mw),
            );
        }
        if !(load.weight.is_finite() && load.weight > 0.0) {
            push(
                &mut out,
                &entity,
                "nonpositive_weight",
                format!("weight = {}", load.weight),
            );
        }
    }

    out
}

/// Per-bus incidence sets, stored as indices into the component vectors.
#[derive(Debug, Clone, Default)]
struct Incidence {
    lines: Vec<usize>,
    generators: Vec<usize>,
    loads: Vec<usize>,
}

/// A validated, immutable grid.
#[derive(Debug, Clone)]
pub struct Network {
    data: NetworkData,
    bus_index: HashMap<u32, usize>,
    line_index: HashMap<u32, usize>,
    gen_index: HashMap<u32, usize>,
    load_index: HashMap<u32, usize>,
    incidence: Vec<Incidence>,
}

impl Network {
    pub fn from_data(data: NetworkData) -> Result<Network, CaseError> {
        let violations = validate(&data);
        if !violations.is_empty() {
            return Err(CaseError::Invalid(violations));
        }

        let bus_index: HashMap<u32, usize> = data
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        let line_index = data
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id, i))
            .collect();
        let gen_index = data
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| (g.id, i))
            .collect();
        let load_index = data
            .loads
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id, i))
            .collect();

        let mut incidence = vec![Incidence::default(); data.buses.len()];
        for (i, line) in data.lines.iter().enumerate() {
            incidence[bus_index[&line.from_bus]].lines.push(i);
            incidence[bus_index[&line.to_bus]].lines.push(i);
        }
        for (i, gen) in data.generators.iter().enumerate() {
            incidence[bus_index[&gen.bus]].generators.push(i);
        }
        for (i, load) in data.loads.iter().enumerate() {
            incidence[bus_index[&load.bus]].loads.push(i);
        }

        Ok(Network {
            data,
            bus_index,
            line_index,
            gen_index,
            load_index,
            incidence,
        })
    }

    pub fn data(&self) -> &NetworkData {
        &self.data
    }

    pub fn into_data(self) -> NetworkData {
        self.data
    }

    pub fn base_mva(&self) -> f64 {
        self.data.base_mva
    }
    pub fn areas(&self) -> &[Area] {
        &self.data.areas
    }
    pub fn buses(&self) -> &[Bus] {
        &self.data.buses
    }
    pub fn lines(&self) -> &[Line] {
        &self.data.lines
    }
    pub fn generators(&self) -> &[Generator] {
        &self.data.generators
    }
    pub fn loads(&self) -> &[Load] {
        &self.data.loads
    }

    pub fn bus_idx(&self, id: u32) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }
    pub fn line_idx(&self, id: u32) -> Option<usize> {
        self.line_index.get(&id).copied()
    }
    pub fn gen_idx(&self, id: u32) -> Option<usize> {
        self.gen_index.get(&id).copied()
    }
    pub fn load_idx(&self, id: u32) -> Option<usize> {
        self.load_index.get(&id).copied()
    }

    /// Position of a component inside its kind's vector.
    pub fn index_of(&self, component: ComponentRef) -> Option<usize> {
        match component.kind {
            ComponentKind::Bus => self.bus_idx(component.id),
            ComponentKind::Line => self.line_idx(component.id),
            ComponentKind::Generator => self.gen_idx(component.id),
            ComponentKind::Load => self.load_idx(component.id),
        }
    }

    pub fn contains(&self, component: ComponentRef) -> bool {
        self.index_of(component).is_some()
    }

    pub fn area(&self, id: u32) -> Option<&Area> {
        self.data.areas.iter().find(|a| a.id == id)
    }

    /// Lines incident to the bus at index `bus_idx` (the set B_i^L).
    pub fn lines_at(&self, bus_idx: usize) -> &[usize] {
        &self.incidence[bus_idx].lines
    }
    /// Generators at the bus at index `bus_idx` (B_i^G).
    pub fn generators_at(&self, bus_idx: usize) -> &[usize] {
        &self.incidence[bus_idx].generators
    }
    /// Loads at the bus at index `bus_idx` (B_i^D).
    pub fn loads_at(&self, bus_idx: usize) -> &[usize] {
        &self.incidence[bus_idx].loads
    }

    /// Bus indices of both ends of the line at index `line_idx`.
    pub fn line_ends(&self, line_idx: usize) -> (usize, usize) {
        let line = &self.data.lines[line_idx];
        (self.bus_index[&line.from_bus], self.bus_index[&line.to_bus])
    }

    pub fn gen_bus_idx(&self, gen_idx: usize) -> usize {
        self.bus_index[&self.data.generators[gen_idx].bus]
    }

    pub fn load_bus_idx(&self, load_idx: usize) -> usize {
        self.bus_index[&self.data.loads[load_idx].bus]
    }

    pub fn total_demand_mw(&self) -> f64 {
        self.data.loads.iter().map(|d| d.demand_mw).sum()
    }

    /// Σ w_d D_d, the largest achievable D_Tot.
    pub fn total_weighted_demand(&self) -> f64 {
        self.data.loads.iter().map(|d| d.weight * d.demand_mw).sum()
    }

    pub fn component_count(&self) -> usize {
        self.data.buses.len()
            + self.data.lines.len()
            + self.data.generators.len()
            + self.data.loads.len()
    }

    /// Every component, in kind order (buses, lines, generators, loads) and
    /// declaration order within a kind.
    pub fn components(&self) -> Vec<ComponentRef> {
        let mut out = Vec::with_capacity(self.component_count());
        out.extend(self.data.buses.iter().map(|b| ComponentRef::bus(b.id)));
        out.extend(self.data.lines.iter().map(|l| ComponentRef::line(l.id)));
        out.extend(
            self.data
                .generators
                .iter()
                .map(|g| ComponentRef::generator(g.id)),
        );
        out.extend(self.data.loads.iter().map(|d| ComponentRef::load(d.id)));
        out
    }

    /// Area a point component sits in: its own area for buses, its bus's
    /// area for generators and loads. `None` for lines.
    pub fn location_area(&self, component: ComponentRef) -> Option<u32> {
        match component.kind {
            ComponentKind::Bus => self
                .bus_idx(component.id)
                .map(|i| self.data.buses[i].area_id),
            ComponentKind::Generator => self
                .gen_idx(component.id)
                .map(|i| self.data.buses[self.gen_bus_idx(i)].area_id),
            ComponentKind::Load => self
                .load_idx(component.id)
                .map(|i| self.data.buses[self.load_bus_idx(i)].area_id),
            ComponentKind::Line => None,
        }
    }

    /// Number of buses per area, used in summaries.
    pub fn buses_per_area(&self) -> BTreeMap<u32, usize> {
        let mut out: BTreeMap<u32, usize> = self.data.areas.iter().map(|a| (a.id, 0)).collect();
        for bus in &self.data.buses {
            *out.entry(bus.area_id).or_default() += 1;
        }
        out
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn valid_two_bus_has_no_violations() {
        assert!(validate(&two_bus_data()).is_empty());
        let net = two_bus();
        assert_eq!(net.buses().len(), 2);
        assert_eq!(net.lines().len(), 1);
        assert_eq!(net.generators().len(), 1);
        assert_eq!(net.loads().len(), 1);
    }

    #[test]
    fn incidence_sets_cover_both_line_ends() {
        let net = triangle();
        let b1 = net.bus_idx(1).unwrap();
        assert_eq!(net.lines_at(b1), &[0, 2]);
        assert_eq!(net.generators_at(b1), &[0]);
        assert!(net.loads_at(b1).is_empty());
        assert_eq!(net.loads_at(net.bus_idx(3).unwrap()), &[1]);
    }

    #[test]
    fn inverted_generation_limits_is_one_violation() {
        let mut data = two_bus_data();
        data.generators[0].p_min_mw = 120.0;
        let v = validate(&data);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "generation_limits");
        assert_eq!(v[0].entity, "generator:1");
    }

    #[test]
    fn zero_load_weight_is_one_violation() {
        let mut data = two_bus_data();
        data.loads[0].weight = 0.0;
        let v = validate(&data);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "nonpositive_weight");
    }

    #[test]
    fn dangling_reference_names_line_and_bus() {
        let mut data = two_bus_data();
        data.lines[0].to_bus = 99;
        let err = Network::from_data(data).unwrap_err();
        let CaseError::Invalid(v) = err else {
            panic!("expected violations")
        };
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "line:1");
        assert_eq!(v[0].rule, "dangling_bus_reference");
        assert!(v[0].detail.contains("99"));
    }

    #[test]
    fn duplicate_ids_and_bad_limits_are_reported() {
        let mut data = triangle_data();
        data.lines[1].id = 1;
        data.lines[2].thermal_limit_mw = 0.0;
        data.lines[2].susceptance_pu = -1.0;
        let rules: Vec<_> = validate(&data).into_iter().map(|v| v.rule).collect();
        assert_eq!(
            rules,
            [
                "duplicate_id",
                "nonpositive_susceptance",
                "nonpositive_thermal_limit"
            ]
        );
    }

    #[test]
    fn component_ref_round_trips_through_text() {
        let c: ComponentRef = "generator:7".parse().unwrap();
        assert_eq!(c, ComponentRef::generator(7));
        assert_eq!(c.to_string(), "generator:7");
        assert!("pump:1".parse::<ComponentRef>().is_err());
        assert!("line".parse::<ComponentRef>().is_err());
    }
}
