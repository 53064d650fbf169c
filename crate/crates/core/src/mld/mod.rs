//! Benchmark shut-off heuristics and the maximum load delivery solve.
//!
//! A heuristic picks a forced-off set 𝓒, [`solve_mld`] serves as much load
//! as possible with 𝓒 switched off, and [`prune_dead_islands`] removes
//! energized islands that end up serving nothing.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpBackend, SolveOptions};
use crate::network::{energized_islands, ComponentKind, ComponentRef, Network};
use crate::ops::{solve_ops, OpsConfig, OpsError, Pin, ShutoffPlan, SolverInfo, TieBreak};
use crate::risk::{area_risk_total, RiskTable};

/// Islands serving at most this many MW count as dead.
pub const DEAD_ISLAND_MW: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
#[error("forced-off set references unknown component {0}")]
pub struct UnknownComponent(pub ComponentRef);

/// The components an MLD solve must keep de-energized.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ForcedOffSet {
    components: BTreeSet<ComponentRef>,
}

impl ForcedOffSet {
    pub fn new(
        network: &Network,
        components: impl IntoIterator<Item = ComponentRef>,
    ) -> Result<Self, UnknownComponent> {
        let components: BTreeSet<ComponentRef> = components.into_iter().collect();
        if let Some(c) = components.iter().find(|c| !network.contains(**c)) {
            return Err(UnknownComponent(*c));
        }
        Ok(ForcedOffSet { components })
    }

    pub fn empty() -> Self {
        ForcedOffSet::default()
    }

    pub fn components(&self) -> &BTreeSet<ComponentRef> {
        &self.components
    }

    pub fn contains(&self, component: ComponentRef) -> bool {
        self.components.contains(&component)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_subset(&self, other: &ForcedOffSet) -> bool {
        self.components.is_subset(&other.components)
    }

    pub fn to_pins(&self) -> Vec<Pin> {
        self.components.iter().map(|&c| Pin::force_off(c)).collect()
    }

    pub fn to_vec(&self) -> Vec<ComponentRef> {
        self.components.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    Area,
    Transmission,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::Area => "area",
            HeuristicKind::Transmission => "transmission",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "area" => Ok(HeuristicKind::Area),
            "transmission" => Ok(HeuristicKind::Transmission),
            other => Err(format!(
                "unknown heuristic `{other}`, expected `area` or `transmission`"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicThresholds {
    pub area_threshold: f64,
    pub line_threshold: f64,
}

/// Areas whose total risk reaches `threshold`.
pub fn triggered_areas(network: &Network, risk: &RiskTable, threshold: f64) -> BTreeSet<u32> {
    network
        .areas()
        .iter()
        .filter(|a| area_risk_total(risk, network, a.id).is_ok_and(|r| r >= threshold))
        .map(|a| a.id)
        .collect()
}

/// Every component located in an area whose total risk is at least
/// `area_threshold`. A line is included when any of its exposure terms or
/// either end bus lies in such an area.
pub fn area_heuristic(network: &Network, risk: &RiskTable, area_threshold: f64) -> ForcedOffSet {
    let hot = triggered_areas(network, risk, area_threshold);
    let mut components = BTreeSet::new();
    for exposure in risk.exposures() {
        let c = exposure.component;
        let located = match c.kind {
            ComponentKind::Line => {
                let l = network.line_idx(c.id).expect("table covers network");
                let (f, t) = network.line_ends(l);
                hot.contains(&network.buses()[f].area_id)
                    || hot.contains(&network.buses()[t].area_id)
            }
            _ => network.location_area(c).is_some_and(|a| hot.contains(&a)),
        };
        if located || exposure.terms.iter().any(|t| hot.contains(&t.area_id)) {
            components.insert(c);
        }
    }
    ForcedOffSet { components }
}

/// Lines whose risk is at least `line_threshold`. Never buses, generators
/// or loads.
pub fn transmission_heuristic(
    network: &Network,
    risk: &RiskTable,
    line_threshold: f64,
) -> ForcedOffSet {
    let components = network
        .lines()
        .iter()
        .zip(risk.line_risk())
        .filter(|(_, &r)| r >= line_threshold)
        .map(|(l, _)| ComponentRef::line(l.id))
        .collect();
    ForcedOffSet { components }
}

pub fn heuristic(
    network: &Network,
    risk: &RiskTable,
    kind: HeuristicKind,
    threshold: f64,
) -> ForcedOffSet {
    match kind {
        HeuristicKind::Area => area_heuristic(network, risk, threshold),
        HeuristicKind::Transmission => transmission_heuristic(network, risk, threshold),
    }
}

/// Maximum load delivery with every member of `forced_off` de-energized.
/// Risk plays no part in the objective. When the solver returns no point
/// the all-off plan is returned with the solver's status.
pub fn solve_mld(
    network: &Network,
    risk: &RiskTable,
    forced_off: &ForcedOffSet,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<ShutoffPlan, OpsError> {
    if let Some(c) = forced_off
        .components
        .iter()
        .find(|c| !network.contains(**c))
    {
        return Err(OpsError::UnknownComponent(*c));
    }
    let config = OpsConfig {
        alpha: 0.0,
        pins: forced_off.to_pins(),
        options: options.clone(),
        tie_break: TieBreak::MostEnergized,
    };
    let mut plan = match solve_ops(network, risk, &config, backend) {
        Ok(plan) => plan,
        Err(OpsError::Solver(status)) => {
            let mut plan = ShutoffPlan::all_off(network, risk, 0.0);
            plan.status = status;
            plan.solver = SolverInfo {
                backend: backend.name().to_string(),
                ..plan.solver
            };
            plan
        }
        Err(e) => return Err(e),
    };
    plan.pins.clear();
    plan.forced_off = Some(forced_off.to_vec());
    Ok(plan)
}

/// De-energizes every energized island that serves no load, repeating until
/// nothing changes. Served load is untouched and risk cannot increase.
pub fn prune_dead_islands(network: &Network, risk: &RiskTable, plan: &ShutoffPlan) -> ShutoffPlan {
    let mut out = plan.clone();
    loop {
        let mut changed = false;
        for (l, line) in out.lines.iter_mut().enumerate() {
            let (f, t) = network.line_ends(l);
            if line.on && !(out.buses[f].on && out.buses[t].on) {
                line.on = false;
                line.flow_mw = 0.0;
                changed = true;
            }
        }
        for (g, gen) in out.generators.iter_mut().enumerate() {
            if gen.on && !out.buses[network.gen_bus_idx(g)].on {
                gen.on = false;
                gen.p_mw = 0.0;
                changed = true;
            }
        }
        let islands =
            energized_islands(network, &out.energization()).expect("plan matches network");
        for island in islands {
            let served: f64 = island
                .loads
                .iter()
                .map(|&id| out.loads[network.load_idx(id).expect("island load")].served_mw)
                .sum();
            if served > DEAD_ISLAND_MW {
                continue;
            }
            changed = true;
            for id in island.buses {
                let b = &mut out.buses[network.bus_idx(id).expect("island bus")];
                b.on = false;
                b.theta_rad = 0.0;
            }
            for id in island.lines {
                let l = &mut out.lines[network.line_idx(id).expect("island line")];
                l.on = false;
                l.flow_mw = 0.0;
            }
            for id in island.generators {
                let g = &mut out.generators[network.gen_idx(id).expect("island gen")];
                g.on = false;
                g.p_mw = 0.0;
            }
            for id in island.loads {
                let d = &mut out.loads[network.load_idx(id).expect("island load")];
                d.served_fraction = 0.0;
                d.served_mw = 0.0;
            }
        }
        if !changed {
            break;
        }
    }
    out.refresh_metrics(network, risk);
    out
}

/// Heuristic, then MLD, then dead-island pruning.
pub fn run_heuristic_pipeline(
    network: &Network,
    risk: &RiskTable,
    kind: HeuristicKind,
    threshold: f64,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<ShutoffPlan, OpsError> {
    let forced = heuristic(network, risk, kind, threshold);
    let plan = solve_mld(network, risk, &forced, backend, options)?;
    Ok(prune_dead_islands(network, risk, &plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::ReferenceBackend;
    use crate::network::fixtures::{triangle, two_bus};
    use crate::risk::{build_risk_table, AreaRisk, Exposure, ExposureTerm};

    fn unit_risk(net: &Network) -> RiskTable {
        let exposures: Vec<Exposure> = net
            .components()
            .into_iter()
            .map(|c| Exposure {
                component: c,
                terms: vec![ExposureTerm {
                    area_id: 1,
                    kappa: 1.0,
                    weight: 1.0,
                }],
            })
            .collect();
        build_risk_table(
            net,
            &[AreaRisk {
                area_id: 1,
                rho: 1.0,
            }],
            &exposures,
            false,
        )
        .unwrap()
    }

    #[test]
    fn transmission_threshold_is_inclusive() {
        let net = triangle();
        let exposures: Vec<Exposure> = net
            .components()
            .into_iter()
            .map(|c| {
                let kappa = match (c.kind, c.id) {
                    (ComponentKind::Line, 1) => 14.0,
                    (ComponentKind::Line, 2) => 5.0,
                    (ComponentKind::Line, 3) => 1.0,
                    _ => 0.5,
                };
                Exposure {
                    component: c,
                    terms: vec![ExposureTerm {
                        area_id: 1,
                        kappa,
                        weight: 1.0,
                    }],
                }
            })
            .collect();
        let risk = build_risk_table(
            &net,
            &[AreaRisk {
                area_id: 1,
                rho: 1.0,
            }],
            &exposures,
            false,
        )
        .unwrap();
        let set = transmission_heuristic(&net, &risk, 5.0);
        assert_eq!(
            set.to_vec(),
            vec![ComponentRef::line(1), ComponentRef::line(2)]
        );
        assert!(transmission_heuristic(&net, &risk, 14.5).is_empty());
        assert_eq!(transmission_heuristic(&net, &risk, 0.0).len(), 3);
    }

    #[test]
    fn area_heuristic_extremes() {
        let net = triangle();
        let risk = unit_risk(&net);
        assert!(area_heuristic(&net, &risk, 1e9).is_empty());
        assert_eq!(
            area_heuristic(&net, &risk, 0.0).len(),
            net.component_count()
        );
    }

    #[test]
    fn mld_without_forced_set_serves_everything() {
        let net = triangle();
        let risk = unit_risk(&net);
        let plan = solve_mld(
            &net,
            &risk,
            &ForcedOffSet::empty(),
            &ReferenceBackend,
            &SolveOptions::tight(),
        )
        .unwrap();
        assert!((plan.d_tot - 100.0).abs() < 1e-9);
        assert_eq!(plan.forced_off, Some(vec![]));
    }

    #[test]
    fn mld_keeps_unforced_components_energized() {
        let net = triangle();
        let risk = unit_risk(&net);
        let plan = solve_mld(
            &net,
            &risk,
            &ForcedOffSet::empty(),
            &ReferenceBackend,
            &SolveOptions::tight(),
        )
        .unwrap();
        assert!(plan.buses.iter().all(|b| b.on));
        assert!(plan.generators.iter().all(|g| g.on));
        assert!(plan.lines.iter().all(|l| l.on));
    }

    #[test]
    fn isolated_load_gets_nothing() {
        let net = two_bus();
        let risk = unit_risk(&net);
        let forced = ForcedOffSet::new(&net, [ComponentRef::line(1)]).unwrap();
        let plan = solve_mld(
            &net,
            &risk,
            &forced,
            &ReferenceBackend,
            &SolveOptions::tight(),
        )
        .unwrap();
        assert_eq!(plan.d_tot, 0.0);
        assert!(!plan.lines[0].on);
    }

    #[test]
    fn pruning_removes_generator_only_island() {
        let net = two_bus();
        let risk = unit_risk(&net);
        let forced = ForcedOffSet::new(&net, [ComponentRef::line(1)]).unwrap();
        let plan = solve_mld(
            &net,
            &risk,
            &forced,
            &ReferenceBackend,
            &SolveOptions::tight(),
        )
        .unwrap();
        let pruned = prune_dead_islands(&net, &risk, &plan);
        assert_eq!(pruned.r_fire, 0.0);
        assert!(pruned.buses.iter().all(|b| !b.on));
        assert_eq!(pruned.d_tot, plan.d_tot);
        assert_eq!(prune_dead_islands(&net, &risk, &pruned), pruned);
    }

    #[test]
    fn unknown_forced_component_is_rejected() {
        let net = two_bus();
        assert_eq!(
            ForcedOffSet::new(&net, [ComponentRef::bus(7)]).unwrap_err(),
            UnknownComponent(ComponentRef::bus(7))
        );
    }

    #[test]
    fn pipeline_at_zero_threshold_turns_everything_off() {
        let net = triangle();
        let risk = unit_risk(&net);
        let plan = run_heuristic_pipeline(
            &net,
            &risk,
            HeuristicKind::Transmission,
            0.0,
            &ReferenceBackend,
            &SolveOptions::tight(),
        )
        .unwrap();
        assert_eq!(plan.d_tot, 0.0);
        assert_eq!(plan.r_fire, 0.0);
    }
}
