//! Parameter sweeps, Pareto fronts and comparison reports.

mod report;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::milp::{MilpBackend, SolveOptions};
use crate::mld::{heuristic, run_heuristic_pipeline, HeuristicKind};
use crate::network::{serialize_case, ComponentRef, Network};
use crate::ops::{solve_ops, OpsConfig, OpsError, Pin, ShutoffPlan};
use crate::risk::{area_risk_total, RiskTable};

pub use report::{
    compare_report, scatter_csv, scatter_rows, select_operating_point, ComparisonReport,
    FrontPoint, OperatingPoint, ParetoFrontEntry, RiskByType, ScatterRow, ScatterSet, SweepSummary,
    LOW_RISK_FRACTION, MEDIUM_RISK_FRACTION,
};

pub const SWEEP_CSV_HEADER: &str = "method,parameter,r_fire,d_tot_mw,objective,status,solve_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ops,
    Transmission,
    Area,
    Standard,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ops => "ops",
            Method::Transmission => "transmission",
            Method::Area => "area",
            Method::Standard => "standard",
        }
    }

    pub fn heuristic(self) -> Option<HeuristicKind> {
        match self {
            Method::Transmission => Some(HeuristicKind::Transmission),
            Method::Area => Some(HeuristicKind::Area),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ops" => Ok(Method::Ops),
            "transmission" => Ok(Method::Transmission),
            "area" => Ok(Method::Area),
            "standard" => Ok(Method::Standard),
            other => Err(format!(
                "unknown method `{other}`, expected ops, transmission or area"
            )),
        }
    }
}

/// One sample of the risk/load trade-off. Failed solves carry NaN metrics
/// and the failure in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub method: Method,
    pub parameter: f64,
    pub r_fire: f64,
    pub d_tot: f64,
    pub objective: f64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_time_s: Option<f64>,
    pub nodes: u64,
    pub lp_solves: u64,
    #[serde(skip)]
    pub plan: Option<Box<ShutoffPlan>>,
}

impl TradeoffPoint {
    pub fn from_plan(method: Method, parameter: f64, plan: ShutoffPlan) -> Self {
        TradeoffPoint {
            method,
            parameter,
            r_fire: plan.r_fire,
            d_tot: plan.d_tot,
            objective: plan.objective,
            status: plan.status.clone(),
            solve_time_s: plan.solver.wall_time_s,
            nodes: plan.solver.nodes,
            lp_solves: plan.solver.lp_solves,
            plan: Some(Box::new(plan)),
        }
    }

    pub fn failed(method: Method, parameter: f64, error: &OpsError) -> Self {
        TradeoffPoint {
            method,
            parameter,
            r_fire: f64::NAN,
            d_tot: f64::NAN,
            objective: f64::NAN,
            status: format!("failed: {error}"),
            solve_time_s: None,
            nodes: 0,
            lp_solves: 0,
            plan: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.r_fire.is_finite() && self.d_tot.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: Method,
    pub points: Vec<TradeoffPoint>,
    pub network_fingerprint: String,
    pub risk_fingerprint: String,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.is_ok()).count()
    }

    /// Delimited table, one row per point. Solve times are written only
    /// with `timing`, so default output is reproducible byte for byte.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let time = match (timing, p.solve_time_s) {
                (true, Some(t)) => t.to_string(),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.method,
                p.parameter,
                p.r_fire,
                p.d_tot,
                p.objective,
                p.status.replace(',', ";"),
                time
            ));
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("alpha {0} lies outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("threshold {0} is not finite")]
    NonFiniteThreshold(f64),
    #[error("method {0} cannot be swept")]
    NotSweepable(Method),
}

/// α ∈ {0, 0.01, …, 1}.
pub fn alpha_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

/// Every threshold at which the heuristic's forced-off set changes, plus one
/// above the largest, in descending order. The comparison is inclusive, so
/// this reaches every plan the heuristic can produce.
pub fn threshold_grid(network: &Network, risk: &RiskTable, kind: HeuristicKind) -> Vec<f64> {
    let mut values: Vec<f64> = match kind {
        HeuristicKind::Transmission => risk.line_risk().to_vec(),
        HeuristicKind::Area => network
            .areas()
            .iter()
            .filter_map(|a| area_risk_total(risk, network, a.id).ok())
            .collect(),
    };
    let top = values.iter().copied().fold(0.0, f64::max) + 1.0;
    values.extend([0.0, top]);
    values.sort_by(|a, b| b.total_cmp(a));
    values.dedup();
    values
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical case serialization.
pub fn network_fingerprint(network: &Network) -> String {
    sha256_hex(serialize_case(network).as_bytes())
}

/// SHA-256 over area values and per-component risks in network order.
pub fn risk_fingerprint(risk: &RiskTable) -> String {
    let doc = serde_json::json!({
        "area_rho": risk.area_rho(),
        "components": risk.entries(),
    });
    sha256_hex(doc.to_string().as_bytes())
}

fn sorted(mut points: Vec<TradeoffPoint>) -> Vec<TradeoffPoint> {
    points.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    points
}

/// One OPS solve per α, run in parallel and reported in α order.
pub fn sweep_alpha(
    network: &Network,
    risk: &RiskTable,
    alphas: &[f64],
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SweepResult, SweepError> {
    sweep_with_progress(
        network,
        risk,
        Method::Ops,
        Some(alphas),
        backend,
        options,
        &|| {},
    )
}

/// One heuristic pipeline run per threshold.
pub fn sweep_threshold(
    network: &Network,
    risk: &RiskTable,
    kind: HeuristicKind,
    thresholds: &[f64],
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SweepResult, SweepError> {
    let method = match kind {
        HeuristicKind::Area => Method::Area,
        HeuristicKind::Transmission => Method::Transmission,
    };
    sweep_with_progress(
        network,
        risk,
        method,
        Some(thresholds),
        backend,
        options,
        &|| {},
    )
}

/// Runs `method` over `grid`, or over its default grid when `grid` is None.
pub fn sweep(
    network: &Network,
    risk: &RiskTable,
    method: Method,
    grid: Option<&[f64]>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SweepResult, SweepError> {
    sweep_with_progress(network, risk, method, grid, backend, options, &|| {})
}

/// [`sweep`] calling `progress` once per finished point.
pub fn sweep_with_progress(
    network: &Network,
    risk: &RiskTable,
    method: Method,
    grid: Option<&[f64]>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
    progress: &(dyn Fn() + Sync),
) -> Result<SweepResult, SweepError> {
    let grid: Vec<f64> = match (method, grid) {
        (Method::Standard, _) => return Err(SweepError::NotSweepable(method)),
        (_, Some(g)) => g.to_vec(),
        (Method::Ops, None) => alpha_grid(),
        (_, None) => threshold_grid(network, risk, method.heuristic().expect("heuristic method")),
    };
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if method == Method::Ops {
        if let Some(&a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(SweepError::AlphaOutOfRange(a));
        }
    } else if let Some(&t) = grid.iter().find(|t| !t.is_finite()) {
        return Err(SweepError::NonFiniteThreshold(t));
    }
    let points = match method.heuristic() {
        None => alpha_points(network, risk, &grid, backend, options, progress),
        Some(kind) => threshold_points(network, risk, kind, &grid, backend, options, progress),
    };
    Ok(SweepResult {
        method,
        points: sorted(points),
        network_fingerprint: network_fingerprint(network),
        risk_fingerprint: risk_fingerprint(risk),
    })
}

/// Objectives of two plans tie for every α once their weighted load and
/// risk agree to this tolerance.
const SAME_PLAN_TOL: f64 = 1e-9;

fn same_tradeoff(a: &Result<ShutoffPlan, OpsError>, b: &Result<ShutoffPlan, OpsError>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let close =
                |x: f64, y: f64| (x - y).abs() <= SAME_PLAN_TOL * x.abs().max(y.abs()).max(1.0);
            a.status == b.status
                && close(a.d_tot_weighted, b.d_tot_weighted)
                && close(a.r_fire, b.r_fire)
        }
        _ => false,
    }
}

/// Copy of `plan` reported at another α. Carries no solver work of its own.
fn reuse_plan(network: &Network, risk: &RiskTable, plan: &ShutoffPlan, alpha: f64) -> ShutoffPlan {
    let mut copy = plan.clone();
    copy.alpha = alpha;
    copy.solver.nodes = 0;
    copy.solver.lp_solves = 0;
    copy.solver.wall_time_s = None;
    copy.refresh_metrics(network, risk);
    copy
}

/// OPS over a sorted α grid by interval bisection. The scalarized objective
/// of a fixed plan is affine in α, so a plan optimal at both ends of an
/// interval is optimal throughout it and the interior needs no solve.
fn alpha_points(
    network: &Network,
    risk: &RiskTable,
    grid: &[f64],
    backend: &dyn MilpBackend,
    options: &SolveOptions,
    progress: &(dyn Fn() + Sync),
) -> Vec<TradeoffPoint> {
    let mut alphas = grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    let solve = |alpha: f64| {
        let out = solve_ops(
            network,
            risk,
            &OpsConfig::new(alpha).with_options(options.clone()),
            backend,
        );
        progress();
        out
    };
    let mut results: Vec<Option<Result<ShutoffPlan, OpsError>>> =
        (0..alphas.len()).map(|_| None).collect();
    let last = alphas.len() - 1;
    let ends: Vec<usize> = if last == 0 { vec![0] } else { vec![0, last] };
    for (k, r) in ends
        .par_iter()
        .map(|&k| (k, solve(alphas[k])))
        .collect::<Vec<_>>()
    {
        results[k] = Some(r);
    }
    let mut open = vec![(0, last)];
    while !open.is_empty() {
        let mut mids = Vec::new();
        for (lo, hi) in open.drain(..) {
            if hi - lo < 2 {
                continue;
            }
            let (a, b) = (
                results[lo].as_ref().expect("filled"),
                results[hi].as_ref().expect("filled"),
            );
            if let (true, Ok(plan)) = (same_tradeoff(a, b), a) {
                let plan = plan.clone();
                for k in lo + 1..hi {
                    results[k] = Some(Ok(reuse_plan(network, risk, &plan, alphas[k])));
                    progress();
                }
            } else {
                mids.push((lo, (lo + hi) / 2, hi));
            }
        }
        let solved: Vec<_> = mids
            .par_iter()
            .map(|&(_, mid, _)| solve(alphas[mid]))
            .collect();
        for ((lo, mid, hi), r) in mids.into_iter().zip(solved) {
            results[mid] = Some(r);
            open.push((lo, mid));
            open.push((mid, hi));
        }
    }
    alphas
        .iter()
        .zip(results)
        .map(|(&alpha, r)| match r.expect("every grid point is filled") {
            Ok(plan) => TradeoffPoint::from_plan(Method::Ops, alpha, plan),
            Err(e) => TradeoffPoint::failed(Method::Ops, alpha, &e),
        })
        .collect()
}

/// Heuristic points. Thresholds that force off the same set share one
/// load-delivery solve.
fn threshold_points(
    network: &Network,
    risk: &RiskTable,
    kind: HeuristicKind,
    grid: &[f64],
    backend: &dyn MilpBackend,
    options: &SolveOptions,
    progress: &(dyn Fn() + Sync),
) -> Vec<TradeoffPoint> {
    let method = match kind {
        HeuristicKind::Area => Method::Area,
        HeuristicKind::Transmission => Method::Transmission,
    };
    let sets: Vec<_> = grid
        .iter()
        .map(|&t| heuristic(network, risk, kind, t))
        .collect();
    let mut distinct: Vec<usize> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if !distinct.iter().any(|&j| sets[j] == *set) {
            distinct.push(i);
        }
    }
    let solved: Vec<(usize, Result<ShutoffPlan, OpsError>)> = distinct
        .par_iter()
        .map(|&i| {
            (
                i,
                run_heuristic_pipeline(network, risk, kind, grid[i], backend, options),
            )
        })
        .collect();
    grid.iter()
        .zip(&sets)
        .map(|(&threshold, set)| {
            let (owner, outcome) = solved
                .iter()
                .find(|(j, _)| sets[*j] == *set)
                .expect("every set was solved");
            progress();
            match outcome {
                Ok(plan) if grid[*owner] == threshold => {
                    TradeoffPoint::from_plan(method, threshold, plan.clone())
                }
                Ok(plan) => {
                    let mut copy = plan.clone();
                    copy.solver.nodes = 0;
                    copy.solver.lp_solves = 0;
                    copy.solver.wall_time_s = None;
                    TradeoffPoint::from_plan(method, threshold, copy)
                }
                Err(e) => TradeoffPoint::failed(method, threshold, e),
            }
        })
        .collect()
}

/// True when `a` is at least as good as `b` on both axes and better on one.
pub fn dominates(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    a.d_tot >= b.d_tot && a.r_fire <= b.r_fire && (a.d_tot > b.d_tot || a.r_fire < b.r_fire)
}

/// Non-dominated points (more load, less risk is better), with equal
/// points collapsed to the one with the smallest parameter, ordered by
/// r_fire ascending. Failed points are ignored.
pub fn pareto_front(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let mut ok: Vec<&TradeoffPoint> = points
        .iter()
        .filter(|p| p.r_fire.is_finite() && p.d_tot.is_finite())
        .collect();
    ok.sort_by(|a, b| {
        a.r_fire
            .total_cmp(&b.r_fire)
            .then(b.d_tot.total_cmp(&a.d_tot))
            .then(a.parameter.total_cmp(&b.parameter))
    });
    // After sorting, a point survives iff it serves strictly more than every
    // point before it.
    let mut front: Vec<TradeoffPoint> = Vec::new();
    let mut best_load = f64::NEG_INFINITY;
    for p in ok {
        if p.d_tot > best_load {
            best_load = p.d_tot;
            front.push(p.clone());
        }
    }
    front
}

/// Standard operation: everything energized, load served as the flow
/// limits allow.
pub fn standard_operation(
    network: &Network,
    risk: &RiskTable,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<ShutoffPlan, OpsError> {
    let pins: Vec<Pin> = network
        .components()
        .into_iter()
        .filter(|c| c.kind != crate::network::ComponentKind::Load)
        .map(Pin::force_on)
        .collect();
    let config = OpsConfig::new(0.0)
        .with_pins(pins)
        .with_options(options.clone());
    solve_ops(network, risk, &config, backend)
}

pub fn standard_point(plan: ShutoffPlan) -> TradeoffPoint {
    TradeoffPoint::from_plan(Method::Standard, 0.0, plan)
}

/// Components whose state differs between two plans of the same network.
pub fn plan_delta(a: &ShutoffPlan, b: &ShutoffPlan) -> Vec<ComponentRef> {
    let mut out = Vec::new();
    for (x, y) in a.buses.iter().zip(&b.buses) {
        if x.on != y.on {
            out.push(ComponentRef::bus(x.id));
        }
    }
    for (x, y) in a.lines.iter().zip(&b.lines) {
        if x.on != y.on {
            out.push(ComponentRef::line(x.id));
        }
    }
    for (x, y) in a.generators.iter().zip(&b.generators) {
        if x.on != y.on {
            out.push(ComponentRef::generator(x.id));
        }
    }
    for (x, y) in a.loads.iter().zip(&b.loads) {
        if x.served_fraction != y.served_fraction {
            out.push(ComponentRef::load(x.id));
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn pt(parameter: f64, r_fire: f64, d_tot: f64) -> TradeoffPoint {
        TradeoffPoint {
            method: Method::Ops,
            parameter,
            r_fire,
            d_tot,
            objective: 0.0,
            status: "optimal".into(),
            solve_time_s: None,
            nodes: 0,
            lp_solves: 0,
            plan: None,
        }
    }

    #[test]
    fn front_of_three() {
        let pts = [
            pt(0.0, 10.0, 100.0),
            pt(0.1, 5.0, 100.0),
            pt(0.2, 7.0, 90.0),
        ];
        let front = pareto_front(&pts);
        assert_eq!(front.len(), 1);
        assert_eq!((front[0].r_fire, front[0].d_tot), (5.0, 100.0));
        assert!(pareto_front(&[]).is_empty());
    }

    #[test]
    fn ties_keep_smallest_parameter() {
        let pts = [pt(0.3, 1.0, 5.0), pt(0.2, 1.0, 5.0), pt(0.5, 0.0, 0.0)];
        let front = pareto_front(&pts);
        assert_eq!(
            front.iter().map(|p| p.parameter).collect::<Vec<_>>(),
            vec![0.5, 0.2]
        );
    }

    #[test]
    fn failed_points_are_skipped() {
        let pts = [pt(0.0, f64::NAN, f64::NAN), pt(1.0, 0.0, 0.0)];
        assert_eq!(pareto_front(&pts).len(), 1);
    }

    #[test]
    fn grids() {
        let a = alpha_grid();
        assert_eq!(a.len(), 101);
        assert_eq!(a[1], 0.01);
        assert_eq!(a[100], 1.0);
    }

    #[test]
    fn threshold_grid_hits_every_breakpoint() {
        use crate::network::fixtures::triangle;
        use crate::risk::{build_risk_table, AreaRisk, Exposure, ExposureTerm};
        let net = triangle();
        let exposures: Vec<Exposure> = net
            .components()
            .into_iter()
            .enumerate()
            .map(|(k, c)| Exposure {
                component: c,
                terms: vec![ExposureTerm {
                    area_id: 1,
                    kappa: 1.0,
                    weight: k as f64,
                }],
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
        // Lines are components 3, 4 and 5.
        assert_eq!(
            threshold_grid(&net, &risk, HeuristicKind::Transmission),
            vec![6.0, 5.0, 4.0, 3.0, 0.0]
        );
        let grid = threshold_grid(&net, &risk, HeuristicKind::Area);
        assert_eq!(grid, vec![risk.total() + 1.0, risk.total(), 0.0]);
        let sets: Vec<_> = threshold_grid(&net, &risk, HeuristicKind::Transmission)
            .iter()
            .map(|&t| heuristic(&net, &risk, HeuristicKind::Transmission, t).len())
            .collect();
        assert_eq!(sets, vec![0, 1, 2, 3, 3]);
    }

    #[test]
    fn csv_layout() {
        let r = SweepResult {
            method: Method::Ops,
            points: vec![pt(0.5, 1.5, 20.0)],
            network_fingerprint: String::new(),
            risk_fingerprint: String::new(),
        };
        assert_eq!(
            r.to_csv(false),
            format!("{SWEEP_CSV_HEADER}\nops,0.5,1.5,20,0,optimal,\n")
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::Ops,
            Method::Transmission,
            Method::Area,
            Method::Standard,
        ] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
