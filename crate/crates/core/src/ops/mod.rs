//! The optimal power shut-off model.
//!
//! [`build_ops`] turns a network, its risk table, a trade-off weight α and
//! operator pins into a MILP that maximizes
//! `(1 − α)·Σ w_d D_d x_d − α·R_Fire` subject to energization coupling,
//! generator limits and a big-M DC power flow. [`solve_ops`] solves it and
//! extracts a physically consistent [`ShutoffPlan`].

mod plan;
mod polish;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{
    ConstraintSense, MilpBackend, MilpProblem, MilpSolution, ObjectiveSense, SolveOptions,
    SolveStatus, VarKind,
};
use crate::network::{ComponentKind, ComponentRef, Network};
use crate::risk::RiskTable;

pub use plan::{
    evaluate_plan, BusState, GeneratorState, LineState, LoadState, PlanEvaluation, PlanShapeError,
    PlanViolation, ShutoffPlan, SolverInfo, VIOLATION_TOL_MW,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinState {
    ForceOn,
    ForceOff,
}

/// Operator decision fixing one component's energization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pin {
    #[serde(flatten)]
    pub component: ComponentRef,
    pub state: PinState,
}

impl Pin {
    pub fn force_off(component: ComponentRef) -> Self {
        Pin {
            component,
            state: PinState::ForceOff,
        }
    }
    pub fn force_on(component: ComponentRef) -> Self {
        Pin {
            component,
            state: PinState::ForceOn,
        }
    }
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = match self.state {
            PinState::ForceOn => "on",
            PinState::ForceOff => "off",
        };
        write!(f, "{}:{state}", self.component)
    }
}

impl FromStr for Pin {
    type Err = String;

    /// Parses `kind:id:on` or `kind:id:off`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (component, state) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `kind:id:on|off`, got `{s}`"))?;
        let state = match state {
            "on" => PinState::ForceOn,
            "off" => PinState::ForceOff,
            other => return Err(format!("pin state must be `on` or `off`, got `{other}`")),
        };
        Ok(Pin {
            component: component.parse()?,
            state,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpsConfig {
    pub alpha: f64,
    pub pins: Vec<Pin>,
    pub options: SolveOptions,
    pub tie_break: TieBreak,
}

/// How ties among optimal plans are broken at α = 0 and α = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Whatever plan the backend returns.
    None,
    /// Among max-load plans the least risky one; among min-risk plans the one
    /// serving most.
    #[default]
    Lexicographic,
    /// Among max-load plans the one with the most buses, generators and lines
    /// energized. α = 1 is broken as in `Lexicographic`.
    MostEnergized,
}

impl OpsConfig {
    pub fn new(alpha: f64) -> Self {
        OpsConfig {
            alpha,
            pins: Vec::new(),
            options: SolveOptions::default(),
            tie_break: TieBreak::Lexicographic,
        }
    }

    pub fn with_pins(mut self, pins: Vec<Pin>) -> Self {
        self.pins = pins;
        self
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OpsError {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("pin references unknown component {0}")]
    UnknownComponent(ComponentRef),
    #[error("{0} is pinned more than once")]
    DuplicatePin(ComponentRef),
    #[error("contradictory pins: {pinned} is forced on but its bus {bus} is forced off")]
    ContradictoryPins {
        pinned: ComponentRef,
        bus: ComponentRef,
    },
    #[error("no plan satisfies the pins")]
    Infeasible,
    #[error("solver returned {0}")]
    Solver(String),
    #[error("risk table does not cover the network")]
    RiskCoverage,
}

impl OpsError {
    /// True for errors caused by pins that cannot hold together.
    pub fn is_conflict(&self) -> bool {
        matches!(
            self,
            OpsError::ContradictoryPins { .. } | OpsError::Infeasible
        )
    }
}

/// Angle box |θ_i| ≤ theta_max and the big-M constant 2·theta_max used when
/// a line is switched off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    pub theta_max: f64,
    pub relax_constant: f64,
}

/// Flow bound per line used by the model: the thermal limit, capped by total
/// demand and by total generator capacity. DC flows carry no circulation, so
/// no line carries more than the load served.
pub fn flow_caps(network: &Network) -> Vec<f64> {
    let demand: f64 = network.loads().iter().map(|d| d.demand_mw).sum();
    let supply: f64 = network.generators().iter().map(|g| g.p_max_mw).sum();
    network
        .lines()
        .iter()
        .map(|l| l.thermal_limit_mw.min(demand).min(supply))
        .collect()
}

/// A simple path has at most n_bus − 1 lines and a live line spans at most
/// cap_l / (b_l · base_mva) radians, so the angle spread of an island is at most
/// the sum of the n_bus − 1 largest such spans. Each island's angles are
/// free up to a common shift, so centring them fits the box at half that sum.
pub fn theta_bound(network: &Network) -> ThetaBound {
    let base = network.base_mva();
    let mut spans: Vec<f64> = network
        .lines()
        .iter()
        .zip(flow_caps(network))
        .map(|(l, cap)| cap / (l.susceptance_pu * base))
        .collect();
    spans.sort_by(|a, b| b.total_cmp(a));
    let spread: f64 = spans
        .iter()
        .take(network.buses().len().saturating_sub(1))
        .sum();
    ThetaBound {
        theta_max: spread / 2.0,
        relax_constant: spread,
    }
}

/// Indices of the OPS variables, per component in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct OpsLayout {
    pub z_bus: Vec<usize>,
    pub z_gen: Vec<usize>,
    pub z_line: Vec<usize>,
    pub x_load: Vec<usize>,
    pub p_gen: Vec<usize>,
    pub p_line: Vec<usize>,
    pub theta: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct OpsModel {
    pub problem: MilpProblem,
    pub layout: OpsLayout,
    pub theta: ThetaBound,
}

/// Checks α and the pins without building anything.
pub fn check_config(network: &Network, config: &OpsConfig) -> Result<(), OpsError> {
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(OpsError::AlphaOutOfRange(config.alpha));
    }
    check_pins(network, &config.pins)
}

pub fn check_pins(network: &Network, pins: &[Pin]) -> Result<(), OpsError> {
    let mut seen = BTreeSet::new();
    for pin in pins {
        if !network.contains(pin.component) {
            return Err(OpsError::UnknownComponent(pin.component));
        }
        if !seen.insert(pin.component) {
            return Err(OpsError::DuplicatePin(pin.component));
        }
    }
    let off_buses: BTreeSet<u32> = pins
        .iter()
        .filter(|p| p.state == PinState::ForceOff && p.component.kind == ComponentKind::Bus)
        .map(|p| p.component.id)
        .collect();
    for pin in pins.iter().filter(|p| p.state == PinState::ForceOn) {
        let c = pin.component;
        let buses = match c.kind {
            ComponentKind::Bus => vec![],
            ComponentKind::Line => {
                let l = &network.lines()[network.line_idx(c.id).expect("checked above")];
                vec![l.from_bus, l.to_bus]
            }
            ComponentKind::Generator => {
                vec![network.generators()[network.gen_idx(c.id).expect("checked above")].bus]
            }
            ComponentKind::Load => {
                vec![network.loads()[network.load_idx(c.id).expect("checked above")].bus]
            }
        };
        if let Some(&bus) = buses.iter().find(|b| off_buses.contains(b)) {
            return Err(OpsError::ContradictoryPins {
                pinned: c,
                bus: ComponentRef::bus(bus),
            });
        }
    }
    Ok(())
}

/// Builds the OPS MILP with its variable layout.
pub fn build_ops_model(
    network: &Network,
    risk: &RiskTable,
    config: &OpsConfig,
) -> Result<OpsModel, OpsError> {
    check_config(network, config)?;
    if !risk.covers(network) {
        return Err(OpsError::RiskCoverage);
    }
    let alpha = config.alpha;
    let base = network.base_mva();
    let theta = theta_bound(network);
    let big_m = theta.relax_constant;
    let mut p = MilpProblem::new(format!("ops_alpha_{alpha}"), ObjectiveSense::Maximize);

    let z_bus: Vec<usize> = network
        .buses()
        .iter()
        .map(|b| p.add_binary(format!("zb_{}", b.id)))
        .collect();
    let z_gen: Vec<usize> = network
        .generators()
        .iter()
        .map(|g| p.add_binary(format!("zg_{}", g.id)))
        .collect();
    let z_line: Vec<usize> = network
        .lines()
        .iter()
        .map(|l| p.add_binary(format!("zl_{}", l.id)))
        .collect();
    let x_load: Vec<usize> = network
        .loads()
        .iter()
        .map(|d| p.add_continuous(format!("x_{}", d.id), 0.0, 1.0))
        .collect();
    let p_gen: Vec<usize> = network
        .generators()
        .iter()
        .map(|g| p.add_continuous(format!("pg_{}", g.id), 0.0, g.p_max_mw))
        .collect();
    let caps = flow_caps(network);
    let p_line: Vec<usize> = network
        .lines()
        .iter()
        .zip(&caps)
        .map(|(l, &cap)| p.add_continuous(format!("pl_{}", l.id), -cap, cap))
        .collect();
    let theta_vars: Vec<usize> = network
        .buses()
        .iter()
        .map(|b| p.add_continuous(format!("th_{}", b.id), -theta.theta_max, theta.theta_max))
        .collect();

    for pin in &config.pins {
        let i = network.index_of(pin.component).expect("pins checked");
        let (var, kind) = match pin.component.kind {
            ComponentKind::Bus => (z_bus[i], VarKind::Binary),
            ComponentKind::Line => (z_line[i], VarKind::Binary),
            ComponentKind::Generator => (z_gen[i], VarKind::Binary),
            ComponentKind::Load => (x_load[i], VarKind::Continuous),
        };
        let v = &mut p.variables[var];
        match (pin.state, kind) {
            (PinState::ForceOff, _) => v.upper = 0.0,
            (PinState::ForceOn, VarKind::Binary) => v.lower = 1.0,
            (PinState::ForceOn, VarKind::Continuous) => {}
        }
    }

    // Objective.
    for (d, load) in network.loads().iter().enumerate() {
        let c = (1.0 - alpha) * load.weight * load.demand_mw - alpha * risk.load_risk()[d];
        if c != 0.0 {
            p.set_objective_term(x_load[d], c);
        }
    }
    let risk_terms = [
        (&z_gen, risk.generator_risk()),
        (&z_line, risk.line_risk()),
        (&z_bus, risk.bus_risk()),
    ];
    for (vars, risks) in risk_terms {
        for (&v, &r) in vars.iter().zip(risks) {
            if alpha * r != 0.0 {
                p.set_objective_term(v, -alpha * r);
            }
        }
    }

    use ConstraintSense::{Eq, Ge, Le};
    // Coupling: loads, generators and lines need their buses.
    for (d, load) in network.loads().iter().enumerate() {
        let b = z_bus[network.load_bus_idx(d)];
        p.add_constraint(
            format!("cpl_load_{}", load.id),
            vec![(x_load[d], 1.0), (b, -1.0)],
            Le,
            0.0,
        );
    }
    for (g, gen) in network.generators().iter().enumerate() {
        let b = z_bus[network.gen_bus_idx(g)];
        p.add_constraint(
            format!("cpl_gen_{}", gen.id),
            vec![(z_gen[g], 1.0), (b, -1.0)],
            Le,
            0.0,
        );
    }
    for (l, line) in network.lines().iter().enumerate() {
        let (f, t) = network.line_ends(l);
        p.add_constraint(
            format!("cpl_line_{}_f", line.id),
            vec![(z_line[l], 1.0), (z_bus[f], -1.0)],
            Le,
            0.0,
        );
        p.add_constraint(
            format!("cpl_line_{}_t", line.id),
            vec![(z_line[l], 1.0), (z_bus[t], -1.0)],
            Le,
            0.0,
        );
    }
    // Interchangeable generators and parallel lines switch on in id order.
    // Swapping two such components maps any plan to one of equal value.
    let pinned: BTreeSet<ComponentRef> = config.pins.iter().map(|p| p.component).collect();
    let mut gen_groups: BTreeMap<(usize, u64, u64, u64), Vec<usize>> = BTreeMap::new();
    for (g, gen) in network.generators().iter().enumerate() {
        if !pinned.contains(&ComponentRef::generator(gen.id)) {
            let key = (
                network.gen_bus_idx(g),
                gen.p_min_mw.to_bits(),
                gen.p_max_mw.to_bits(),
                risk.generator_risk()[g].to_bits(),
            );
            gen_groups.entry(key).or_default().push(g);
        }
    }
    let mut line_groups: BTreeMap<(usize, usize, u64, u64, u64), Vec<usize>> = BTreeMap::new();
    for (l, line) in network.lines().iter().enumerate() {
        if !pinned.contains(&ComponentRef::line(line.id)) {
            let (f, t) = network.line_ends(l);
            let key = (
                f.min(t),
                f.max(t),
                line.susceptance_pu.to_bits(),
                line.thermal_limit_mw.to_bits(),
                risk.line_risk()[l].to_bits(),
            );
            line_groups.entry(key).or_default().push(l);
        }
    }
    let gen_ids = network.generators().iter().map(|g| g.id);
    let line_ids = network.lines().iter().map(|l| l.id);
    for (prefix, groups, vars, ids) in [
        (
            "sym_gen",
            gen_groups.into_values().collect::<Vec<_>>(),
            &z_gen,
            gen_ids.collect::<Vec<_>>(),
        ),
        (
            "sym_line",
            line_groups.into_values().collect(),
            &z_line,
            line_ids.collect(),
        ),
    ] {
        for group in groups {
            for w in group.windows(2) {
                p.add_constraint(
                    format!("{prefix}_{}_{}", ids[w[0]], ids[w[1]]),
                    vec![(vars[w[0]], 1.0), (vars[w[1]], -1.0)],
                    Ge,
                    0.0,
                );
            }
        }
    }
    // Generator limits.
    for (g, gen) in network.generators().iter().enumerate() {
        p.add_constraint(
            format!("gmin_{}", gen.id),
            vec![(p_gen[g], 1.0), (z_gen[g], -gen.p_min_mw)],
            Ge,
            0.0,
        );
        p.add_constraint(
            format!("gmax_{}", gen.id),
            vec![(p_gen[g], 1.0), (z_gen[g], -gen.p_max_mw)],
            Le,
            0.0,
        );
    }
    // DC flow, relaxed when the line is off, and zero flow on dead lines.
    for (l, line) in network.lines().iter().enumerate() {
        let (f, t) = network.line_ends(l);
        let s = line.susceptance_pu * base;
        let sm = s * big_m;
        p.add_constraint(
            format!("dcf_hi_{}", line.id),
            vec![
                (p_line[l], 1.0),
                (theta_vars[f], -s),
                (theta_vars[t], s),
                (z_line[l], sm),
            ],
            Le,
            sm,
        );
        p.add_constraint(
            format!("dcf_lo_{}", line.id),
            vec![
                (p_line[l], 1.0),
                (theta_vars[f], -s),
                (theta_vars[t], s),
                (z_line[l], -sm),
            ],
            Ge,
            -sm,
        );
        let cap = caps[l];
        p.add_constraint(
            format!("cap_hi_{}", line.id),
            vec![(p_line[l], 1.0), (z_line[l], -cap)],
            Le,
            0.0,
        );
        p.add_constraint(
            format!("cap_lo_{}", line.id),
            vec![(p_line[l], 1.0), (z_line[l], cap)],
            Ge,
            0.0,
        );
    }
    // Nodal balance: generation + inflow − outflow − served load = 0.
    for (i, bus) in network.buses().iter().enumerate() {
        let mut terms = Vec::new();
        for &g in network.generators_at(i) {
            terms.push((p_gen[g], 1.0));
        }
        for &l in network.lines_at(i) {
            let (f, _) = network.line_ends(l);
            terms.push((p_line[l], if f == i { -1.0 } else { 1.0 }));
        }
        for &d in network.loads_at(i) {
            terms.push((x_load[d], -network.loads()[d].demand_mw));
        }
        p.add_constraint(format!("bal_{}", bus.id), terms, Eq, 0.0);
    }

    Ok(OpsModel {
        problem: p,
        layout: OpsLayout {
            z_bus,
            z_gen,
            z_line,
            x_load,
            p_gen,
            p_line,
            theta: theta_vars,
        },
        theta,
    })
}

/// The OPS MILP for `config`.
pub fn build_ops(
    network: &Network,
    risk: &RiskTable,
    config: &OpsConfig,
) -> Result<MilpProblem, OpsError> {
    build_ops_model(network, risk, config).map(|m| m.problem)
}

fn risk_terms(network: &Network, risk: &RiskTable, layout: &OpsLayout) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    let groups = [
        (&layout.x_load, risk.load_risk()),
        (&layout.z_gen, risk.generator_risk()),
        (&layout.z_line, risk.line_risk()),
        (&layout.z_bus, risk.bus_risk()),
    ];
    for (vars, risks) in groups {
        terms.extend(
            vars.iter()
                .zip(risks)
                .filter(|(_, &r)| r != 0.0)
                .map(|(&v, &r)| (v, r)),
        );
    }
    debug_assert!(terms.len() <= network.component_count());
    terms
}

fn load_terms(network: &Network, layout: &OpsLayout) -> Vec<(usize, f64)> {
    network
        .loads()
        .iter()
        .zip(&layout.x_load)
        .map(|(d, &v)| (v, d.weight * d.demand_mw))
        .filter(|&(_, c)| c != 0.0)
        .collect()
}

fn usable(solution: &MilpSolution) -> Result<(), OpsError> {
    match &solution.status {
        SolveStatus::Infeasible => Err(OpsError::Infeasible),
        s if solution.has_values() && (s.has_solution() || *s == SolveStatus::LimitHit) => Ok(()),
        s => Err(OpsError::Solver(s.to_string())),
    }
}

/// Slack allowed on the primary objective in the lexicographic second stage.
/// Held at solver feasibility scale so endpoint loads agree to 1e-6 MW.
const STAGE_TOLERANCE: f64 = 1e-7;

/// Objective of the second lexicographic stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Secondary {
    LeastRisk,
    MostEnergized,
    MostLoad,
}

/// Re-solves with the primary objective held near its optimum and the
/// secondary one optimized instead. Falls back to `first` on failure.
fn refine(
    model: &OpsModel,
    network: &Network,
    risk: &RiskTable,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
    first: MilpSolution,
    secondary: Secondary,
) -> MilpSolution {
    let alpha_zero = secondary != Secondary::MostLoad;
    let load = load_terms(network, &model.layout);
    let risk_t = risk_terms(network, risk, &model.layout);
    let eval =
        |terms: &[(usize, f64)]| terms.iter().map(|&(j, c)| c * first.values[j]).sum::<f64>();
    let mut p = model.problem.clone();
    if alpha_zero {
        let best = eval(&load);
        p.add_constraint(
            "keep_load",
            load,
            ConstraintSense::Ge,
            best - STAGE_TOLERANCE,
        );
        p.objective = if secondary == Secondary::MostEnergized {
            let layout = &model.layout;
            crate::milp::Objective {
                sense: ObjectiveSense::Maximize,
                terms: layout
                    .z_bus
                    .iter()
                    .chain(&layout.z_gen)
                    .chain(&layout.z_line)
                    .map(|&j| (j, 1.0))
                    .collect(),
                constant: 0.0,
            }
        } else {
            crate::milp::Objective {
                sense: ObjectiveSense::Minimize,
                terms: risk_t,
                constant: 0.0,
            }
        };
    } else {
        let best = eval(&risk_t);
        p.add_constraint(
            "keep_risk",
            risk_t,
            ConstraintSense::Le,
            best + STAGE_TOLERANCE,
        );
        p.objective = crate::milp::Objective {
            sense: ObjectiveSense::Maximize,
            terms: load,
            constant: 0.0,
        };
    }
    let mut second = backend.solve(&p, options);
    if alpha_zero && second.status == SolveStatus::Optimal && second.has_values() {
        second = resolve_fixed_binaries(model, backend, options, second);
    }
    if second.status == SolveStatus::Optimal && second.has_values() {
        let mut out = second;
        out.objective = model.problem.objective_value(&out.values);
        out.stats.nodes += first.stats.nodes;
        out.stats.lp_solves += first.stats.lp_solves;
        out.stats.wall_time_s += first.stats.wall_time_s;
        out
    } else {
        first
    }
}

/// With the energization of `solution` fixed, re-solves the LP for the model
/// objective. Clears integrality-tolerance noise from the continuous values and
/// returns load a risk stage traded within its slack. Keeps `solution` on failure.
fn resolve_fixed_binaries(
    model: &OpsModel,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
    solution: MilpSolution,
) -> MilpSolution {
    let layout = &model.layout;
    let mut p = model.problem.clone();
    for &j in layout
        .z_bus
        .iter()
        .chain(&layout.z_gen)
        .chain(&layout.z_line)
    {
        let z = solution.values[j].round();
        p.variables[j].lower = z;
        p.variables[j].upper = z;
    }
    let lp = backend.solve(&p, options);
    if lp.status == SolveStatus::Optimal && lp.has_values() {
        let mut out = lp;
        out.stats.nodes += solution.stats.nodes;
        out.stats.lp_solves += solution.stats.lp_solves;
        out.stats.wall_time_s += solution.stats.wall_time_s;
        out
    } else {
        solution
    }
}

/// Solves OPS and returns the polished plan with d_tot and r_fire recomputed
/// from the plan itself.
pub fn solve_ops(
    network: &Network,
    risk: &RiskTable,
    config: &OpsConfig,
    backend: &dyn MilpBackend,
) -> Result<ShutoffPlan, OpsError> {
    let model = build_ops_model(network, risk, config)?;
    let mut solution = backend.solve(&model.problem, &config.options);
    if solution.stats.backend.is_empty() {
        solution.stats.backend = backend.name().to_string();
    }
    usable(&solution)?;
    if solution.status == SolveStatus::Optimal {
        solution = resolve_fixed_binaries(&model, backend, &config.options, solution);
    }
    if config.tie_break != TieBreak::None && solution.status == SolveStatus::Optimal {
        if config.alpha == 0.0 {
            let secondary = match config.tie_break {
                TieBreak::MostEnergized => Secondary::MostEnergized,
                _ => Secondary::LeastRisk,
            };
            solution = refine(
                &model,
                network,
                risk,
                backend,
                &config.options,
                solution,
                secondary,
            );
        } else if config.alpha == 1.0 {
            solution = refine(
                &model,
                network,
                risk,
                backend,
                &config.options,
                solution,
                Secondary::MostLoad,
            );
        }
    }
    Ok(plan_from_solution(
        network,
        risk,
        &model,
        &solution,
        config.alpha,
        &config.pins,
    ))
}

/// Rounds, polishes and measures the plan encoded in `solution`.
pub fn plan_from_solution(
    network: &Network,
    risk: &RiskTable,
    model: &OpsModel,
    solution: &MilpSolution,
    alpha: f64,
    pins: &[Pin],
) -> ShutoffPlan {
    let v = &solution.values;
    let lay = &model.layout;
    let mut raw = polish::RawPlan {
        z_bus: lay.z_bus.iter().map(|&j| v[j] > 0.5).collect(),
        z_gen: lay.z_gen.iter().map(|&j| v[j] > 0.5).collect(),
        z_line: lay.z_line.iter().map(|&j| v[j] > 0.5).collect(),
        x_load: lay.x_load.iter().map(|&j| v[j]).collect(),
        p_gen: lay.p_gen.iter().map(|&j| v[j]).collect(),
        p_line: lay.p_line.iter().map(|&j| v[j]).collect(),
        theta: lay.theta.iter().map(|&j| v[j]).collect(),
    };
    polish::polish(network, &mut raw, model.theta.theta_max);
    let info = SolverInfo {
        backend: solution.stats.backend.clone(),
        nodes: solution.stats.nodes,
        lp_solves: solution.stats.lp_solves,
        wall_time_s: Some(solution.stats.wall_time_s),
        solver_objective: solution.objective,
    };
    ShutoffPlan::from_raw(
        network,
        risk,
        raw,
        alpha,
        solution.status.label(),
        pins.to_vec(),
        info,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::ReferenceBackend;
    use crate::network::fixtures::{triangle, two_bus};
    use crate::risk::{build_risk_table, AreaRisk, Exposure, ExposureTerm};

    fn line_only_risk(net: &Network) -> RiskTable {
        let exposures: Vec<Exposure> = net
            .components()
            .into_iter()
            .map(|c| Exposure {
                component: c,
                terms: vec![ExposureTerm {
                    area_id: 1,
                    kappa: if c.kind == ComponentKind::Line {
                        1.0
                    } else {
                        0.0
                    },
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
    fn theta_bound_sums_the_longest_tree() {
        // Two-bus: the 100 MW line is capped at the 50 MW demand.
        let net = two_bus();
        assert_eq!(flow_caps(&net), [50.0]);
        let tb = theta_bound(&net);
        assert!((tb.theta_max - 0.025).abs() < 1e-15);
        assert!((tb.relax_constant - 0.05).abs() < 1e-15);
        // Triangle: three spans of 100 MW / (10 pu · 100 MVA), two per tree.
        let tb = theta_bound(&triangle());
        assert!((tb.relax_constant - 0.2).abs() < 1e-15);
        assert!((tb.theta_max - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_bus_structure() {
        let net = two_bus();
        let risk = line_only_risk(&net);
        let p = build_ops(&net, &risk, &OpsConfig::new(0.5)).unwrap();
        assert_eq!(p.variables.len(), 9);
        assert_eq!(p.binary_count(), 4);
        assert_eq!(p.constraints.len(), 12);
    }

    #[test]
    fn alpha_zero_has_no_risk_terms() {
        let net = triangle();
        let risk = line_only_risk(&net);
        let model = build_ops_model(&net, &risk, &OpsConfig::new(0.0)).unwrap();
        let zs: BTreeSet<usize> = [
            &model.layout.z_bus,
            &model.layout.z_gen,
            &model.layout.z_line,
        ]
        .into_iter()
        .flatten()
        .copied()
        .collect();
        assert!(model
            .problem
            .objective
            .terms
            .iter()
            .all(|(j, _)| !zs.contains(j)));
    }

    #[test]
    fn pins_become_bounds() {
        let net = two_bus();
        let risk = line_only_risk(&net);
        let config = OpsConfig::new(0.5).with_pins(vec![Pin::force_off(ComponentRef::line(1))]);
        let model = build_ops_model(&net, &risk, &config).unwrap();
        let v = &model.problem.variables[model.layout.z_line[0]];
        assert_eq!((v.lower, v.upper), (0.0, 0.0));
    }

    #[test]
    fn config_errors() {
        let net = two_bus();
        let risk = line_only_risk(&net);
        assert_eq!(
            build_ops(&net, &risk, &OpsConfig::new(1.5)).unwrap_err(),
            OpsError::AlphaOutOfRange(1.5)
        );
        let bad = OpsConfig::new(0.5).with_pins(vec![Pin::force_off(ComponentRef::line(9))]);
        assert_eq!(
            build_ops(&net, &risk, &bad).unwrap_err(),
            OpsError::UnknownComponent(ComponentRef::line(9))
        );
        let clash = OpsConfig::new(0.5).with_pins(vec![
            Pin::force_on(ComponentRef::line(1)),
            Pin::force_off(ComponentRef::bus(2)),
        ]);
        assert!(build_ops(&net, &risk, &clash).unwrap_err().is_conflict());
    }

    #[test]
    fn two_bus_small_alpha_serves_everything() {
        let net = two_bus();
        let risk = line_only_risk(&net);
        let plan = solve_ops(&net, &risk, &OpsConfig::new(0.01), &ReferenceBackend).unwrap();
        assert!((plan.d_tot - 50.0).abs() < 1e-9);
        assert!(plan.buses.iter().all(|b| b.on) && plan.lines[0].on && plan.generators[0].on);
        assert!((plan.r_fire - 1.0).abs() < 1e-12);
        assert!((plan.lines[0].flow_mw - 50.0).abs() < 1e-9);
    }

    #[test]
    fn two_bus_alpha_one_shuts_everything_risky() {
        let net = two_bus();
        let risk = line_only_risk(&net);
        let plan = solve_ops(&net, &risk, &OpsConfig::new(1.0), &ReferenceBackend).unwrap();
        assert_eq!(plan.r_fire, 0.0);
        assert_eq!(plan.d_tot, 0.0);
        assert!(!plan.lines[0].on);
    }

    #[test]
    fn pin_text_round_trips() {
        let pin: Pin = "line:7:off".parse().unwrap();
        assert_eq!(pin, Pin::force_off(ComponentRef::line(7)));
        assert_eq!(pin.to_string(), "line:7:off");
        assert!("line:7:maybe".parse::<Pin>().is_err());
        let json = serde_json::to_string(&pin).unwrap();
        assert_eq!(json, r#"{"kind":"line","id":7,"state":"force_off"}"#);
    }
}
