//! Shut-off plans and their independent evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::polish::RawPlan;
use super::Pin;
use crate::network::{
    energized_islands, ComponentKind, ComponentRef, Energization, Island, Network,
};
use crate::risk::{risk_breakdown, RiskBreakdown, RiskTable};

/// Residuals above this many MW are reported as violations.
pub const VIOLATION_TOL_MW: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusState {
    pub id: u32,
    pub on: bool,
    pub theta_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineState {
    pub id: u32,
    pub on: bool,
    pub flow_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorState {
    pub id: u32,
    pub on: bool,
    pub p_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadState {
    pub id: u32,
    pub served_fraction: f64,
    pub served_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub backend: String,
    pub nodes: u64,
    pub lp_solves: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    /// Objective reported by the solver before polishing.
    pub solver_objective: f64,
}

/// A complete energization decision with its dispatch and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShutoffPlan {
    pub alpha: f64,
    pub status: String,
    /// (1 − α)·d_tot_weighted − α·r_fire, measured on the plan.
    pub objective: f64,
    pub d_tot: f64,
    pub d_tot_weighted: f64,
    pub r_fire: f64,
    pub buses: Vec<BusState>,
    pub lines: Vec<LineState>,
    pub generators: Vec<GeneratorState>,
    pub loads: Vec<LoadState>,
    #[serde(default)]
    pub pins: Vec<Pin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_off: Option<Vec<ComponentRef>>,
    pub solver: SolverInfo,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanShapeError {
    #[error("plan lists {got} {kind} entries, network has {expected}")]
    Length {
        kind: ComponentKind,
        got: usize,
        expected: usize,
    },
    #[error("plan entry {position} for {kind} has id {got}, network has {expected}")]
    Id {
        kind: ComponentKind,
        position: usize,
        got: u32,
        expected: u32,
    },
}

impl ShutoffPlan {
    pub(crate) fn from_raw(
        network: &Network,
        risk: &RiskTable,
        raw: RawPlan,
        alpha: f64,
        status: &str,
        pins: Vec<Pin>,
        solver: SolverInfo,
    ) -> Self {
        let mut plan = ShutoffPlan {
            alpha,
            status: status.to_string(),
            objective: 0.0,
            d_tot: 0.0,
            d_tot_weighted: 0.0,
            r_fire: 0.0,
            buses: network
                .buses()
                .iter()
                .enumerate()
                .map(|(i, b)| BusState {
                    id: b.id,
                    on: raw.z_bus[i],
                    theta_rad: raw.theta[i],
                })
                .collect(),
            lines: network
                .lines()
                .iter()
                .enumerate()
                .map(|(i, l)| LineState {
                    id: l.id,
                    on: raw.z_line[i],
                    flow_mw: raw.p_line[i],
                })
                .collect(),
            generators: network
                .generators()
                .iter()
                .enumerate()
                .map(|(i, g)| GeneratorState {
                    id: g.id,
                    on: raw.z_gen[i],
                    p_mw: raw.p_gen[i],
                })
                .collect(),
            loads: network
                .loads()
                .iter()
                .enumerate()
                .map(|(i, d)| LoadState {
                    id: d.id,
                    served_fraction: raw.x_load[i],
                    served_mw: raw.x_load[i] * d.demand_mw,
                })
                .collect(),
            pins,
            forced_off: None,
            solver,
        };
        plan.refresh_metrics(network, risk);
        plan
    }

    /// Every component off, nothing served.
    pub fn all_off(network: &Network, risk: &RiskTable, alpha: f64) -> Self {
        let raw = RawPlan {
            z_bus: vec![false; network.buses().len()],
            z_gen: vec![false; network.generators().len()],
            z_line: vec![false; network.lines().len()],
            x_load: vec![0.0; network.loads().len()],
            p_gen: vec![0.0; network.generators().len()],
            p_line: vec![0.0; network.lines().len()],
            theta: vec![0.0; network.buses().len()],
        };
        let solver = SolverInfo {
            backend: String::new(),
            nodes: 0,
            lp_solves: 0,
            wall_time_s: None,
            solver_objective: 0.0,
        };
        ShutoffPlan::from_raw(network, risk, raw, alpha, "optimal", Vec::new(), solver)
    }

    pub fn energization(&self) -> Energization {
        Energization {
            bus: self.buses.iter().map(|b| b.on).collect(),
            line: self.lines.iter().map(|l| l.on).collect(),
            generator: self.generators.iter().map(|g| g.on).collect(),
            load: self.loads.iter().map(|d| d.served_fraction).collect(),
        }
    }

    /// Recomputes d_tot, d_tot_weighted, r_fire and the objective from the
    /// plan's own states.
    pub fn refresh_metrics(&mut self, network: &Network, risk: &RiskTable) {
        self.d_tot = self.loads.iter().map(|d| d.served_mw).sum();
        self.d_tot_weighted = self
            .loads
            .iter()
            .zip(network.loads())
            .map(|(s, d)| s.served_fraction * d.weight * d.demand_mw)
            .sum();
        self.r_fire =
            risk_breakdown(network, risk, &self.energization()).map_or(f64::NAN, |b| b.total);
        self.objective = (1.0 - self.alpha) * self.d_tot_weighted - self.alpha * self.r_fire;
    }

    pub fn risk_breakdown(&self, network: &Network, risk: &RiskTable) -> RiskBreakdown {
        risk_breakdown(network, risk, &self.energization()).unwrap_or_default()
    }

    /// Energization value of one component: 1/0 for binaries, x_d for loads.
    pub fn component_state(&self, component: ComponentRef) -> Option<f64> {
        let on = |b: bool| if b { 1.0 } else { 0.0 };
        match component.kind {
            ComponentKind::Bus => self
                .buses
                .iter()
                .find(|b| b.id == component.id)
                .map(|b| on(b.on)),
            ComponentKind::Line => self
                .lines
                .iter()
                .find(|l| l.id == component.id)
                .map(|l| on(l.on)),
            ComponentKind::Generator => self
                .generators
                .iter()
                .find(|g| g.id == component.id)
                .map(|g| on(g.on)),
            ComponentKind::Load => self
                .loads
                .iter()
                .find(|d| d.id == component.id)
                .map(|d| d.served_fraction),
        }
    }

    /// Components switched off (loads: not served at all).
    pub fn shut_off(&self) -> Vec<ComponentRef> {
        let mut out: Vec<ComponentRef> = Vec::new();
        out.extend(
            self.buses
                .iter()
                .filter(|b| !b.on)
                .map(|b| ComponentRef::bus(b.id)),
        );
        out.extend(
            self.lines
                .iter()
                .filter(|l| !l.on)
                .map(|l| ComponentRef::line(l.id)),
        );
        out.extend(
            self.generators
                .iter()
                .filter(|g| !g.on)
                .map(|g| ComponentRef::generator(g.id)),
        );
        out.extend(
            self.loads
                .iter()
                .filter(|d| d.served_fraction == 0.0)
                .map(|d| ComponentRef::load(d.id)),
        );
        out
    }

    /// Pretty JSON. Without `timing` the wall-clock field is dropped so the
    /// output is byte-reproducible.
    pub fn to_json(&self, timing: bool) -> String {
        let mut copy = self.clone();
        if !timing {
            copy.solver.wall_time_s = None;
        }
        let mut text = serde_json::to_string_pretty(&copy).expect("plan serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn check_shape(&self, network: &Network) -> Result<(), PlanShapeError> {
        fn ids<T>(
            kind: ComponentKind,
            plan: impl ExactSizeIterator<Item = u32>,
            net: &[T],
            id: impl Fn(&T) -> u32,
        ) -> Result<(), PlanShapeError> {
            if plan.len() != net.len() {
                return Err(PlanShapeError::Length {
                    kind,
                    got: plan.len(),
                    expected: net.len(),
                });
            }
            for (position, (got, n)) in plan.zip(net).enumerate() {
                if got != id(n) {
                    return Err(PlanShapeError::Id {
                        kind,
                        position,
                        got,
                        expected: id(n),
                    });
                }
            }
            Ok(())
        }
        ids(
            ComponentKind::Bus,
            self.buses.iter().map(|b| b.id),
            network.buses(),
            |b| b.id,
        )?;
        ids(
            ComponentKind::Line,
            self.lines.iter().map(|l| l.id),
            network.lines(),
            |l| l.id,
        )?;
        ids(
            ComponentKind::Generator,
            self.generators.iter().map(|g| g.id),
            network.generators(),
            |g| g.id,
        )?;
        ids(
            ComponentKind::Load,
            self.loads.iter().map(|d| d.id),
            network.loads(),
            |d| d.id,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanViolation {
    pub component: ComponentRef,
    pub rule: String,
    pub amount: f64,
}

/// Metrics and physical checks of a plan, computed without the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub d_tot: f64,
    pub d_tot_weighted: f64,
    pub r_fire: f64,
    pub risk: RiskBreakdown,
    pub max_balance_residual_mw: f64,
    pub max_limit_violation_mw: f64,
    pub max_flow_mismatch_mw: f64,
    pub violations: Vec<PlanViolation>,
    pub islands: Vec<Island>,
}

impl PlanEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes every metric of `plan` and checks coupling, limits, the DC
/// flow law on live lines, zero flow on dead lines and nodal balance.
pub fn evaluate_plan(
    network: &Network,
    risk: &RiskTable,
    plan: &ShutoffPlan,
) -> Result<PlanEvaluation, PlanShapeError> {
    plan.check_shape(network)?;
    let mut violations = Vec::new();
    let mut flag = |component: ComponentRef, rule: &str, amount: f64| {
        violations.push(PlanViolation {
            component,
            rule: rule.to_string(),
            amount,
        });
    };
    let mut limit = 0.0_f64;
    let mut mismatch = 0.0_f64;
    let bus_on = |i: usize| plan.buses[i].on;

    for (g, gen) in network.generators().iter().enumerate() {
        let st = &plan.generators[g];
        let c = ComponentRef::generator(gen.id);
        if st.on && !bus_on(network.gen_bus_idx(g)) {
            flag(c, "coupling", 1.0);
        }
        let excess = if st.on {
            (gen.p_min_mw - st.p_mw)
                .max(st.p_mw - gen.p_max_mw)
                .max(0.0)
        } else {
            st.p_mw.abs()
        };
        limit = limit.max(excess);
        if excess > VIOLATION_TOL_MW {
            flag(
                c,
                if st.on {
                    "generation_limits"
                } else {
                    "dead_generator_output"
                },
                excess,
            );
        }
    }
    for (d, load) in network.loads().iter().enumerate() {
        let st = &plan.loads[d];
        let c = ComponentRef::load(load.id);
        let x = st.served_fraction;
        if !(0.0..=1.0).contains(&x) {
            flag(c, "served_fraction", (x - x.clamp(0.0, 1.0)).abs());
        }
        if x > 0.0 && !bus_on(network.load_bus_idx(d)) {
            flag(c, "coupling", 1.0);
        }
        if (st.served_mw - x * load.demand_mw).abs() > VIOLATION_TOL_MW {
            flag(c, "served_mw", (st.served_mw - x * load.demand_mw).abs());
        }
    }
    let base = network.base_mva();
    for (l, line) in network.lines().iter().enumerate() {
        let st = &plan.lines[l];
        let c = ComponentRef::line(line.id);
        let (f, t) = network.line_ends(l);
        if st.on && !(bus_on(f) && bus_on(t)) {
            flag(c, "coupling", 1.0);
        }
        if st.on {
            let over = st.flow_mw.abs() - line.thermal_limit_mw;
            limit = limit.max(over);
            if over > VIOLATION_TOL_MW {
                flag(c, "thermal_limit", over);
            }
            let s = line.susceptance_pu * base;
            let gap = (st.flow_mw - s * (plan.buses[f].theta_rad - plan.buses[t].theta_rad)).abs();
            mismatch = mismatch.max(gap);
            if gap > VIOLATION_TOL_MW {
                flag(c, "dc_flow", gap);
            }
        } else {
            limit = limit.max(st.flow_mw.abs());
            if st.flow_mw.abs() > VIOLATION_TOL_MW {
                flag(c, "dead_line_flow", st.flow_mw.abs());
            }
        }
    }
    let mut residual = 0.0_f64;
    for (i, bus) in network.buses().iter().enumerate() {
        let mut r: f64 = network
            .generators_at(i)
            .iter()
            .map(|&g| plan.generators[g].p_mw)
            .sum();
        for &l in network.lines_at(i) {
            let (f, _) = network.line_ends(l);
            r += if f == i {
                -plan.lines[l].flow_mw
            } else {
                plan.lines[l].flow_mw
            };
        }
        r -= network
            .loads_at(i)
            .iter()
            .map(|&d| plan.loads[d].served_mw)
            .sum::<f64>();
        residual = residual.max(r.abs());
        if r.abs() > VIOLATION_TOL_MW {
            flag(ComponentRef::bus(bus.id), "balance", r.abs());
        }
    }

    let state = plan.energization();
    let breakdown = risk_breakdown(network, risk, &state).unwrap_or_default();
    let islands = energized_islands(network, &state).expect("shape checked");
    let d_tot = network
        .loads()
        .iter()
        .zip(&plan.loads)
        .map(|(d, s)| s.served_fraction * d.demand_mw)
        .sum();
    let d_tot_weighted = network
        .loads()
        .iter()
        .zip(&plan.loads)
        .map(|(d, s)| s.served_fraction * d.weight * d.demand_mw)
        .sum();
    Ok(PlanEvaluation {
        d_tot,
        d_tot_weighted,
        r_fire: breakdown.total,
        risk: breakdown,
        max_balance_residual_mw: residual,
        max_limit_violation_mw: limit.max(0.0),
        max_flow_mismatch_mw: mismatch,
        violations,
        islands,
    })
}
