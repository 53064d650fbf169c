//! Comparison report: selected operating points per method, risk split by
//! component kind, line risk/flow scatter data and Pareto fronts.

use serde::{Deserialize, Serialize};

use super::{pareto_front, Method, SweepResult, TradeoffPoint};
use crate::network::Network;
use crate::ops::ShutoffPlan;
use crate::risk::RiskTable;

/// Target risk of the "medium" and "low" scenarios, as a fraction of the
/// standard-operation risk.
pub const MEDIUM_RISK_FRACTION: f64 = 0.5;
pub const LOW_RISK_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub scenario: String,
    pub method: Method,
    pub parameter: f64,
    pub total_risk: f64,
    pub load_served_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskByType {
    pub scenario: String,
    pub method: Method,
    pub parameter: f64,
    pub total: f64,
    pub bus: f64,
    pub line: f64,
    pub gen: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub line_id: u32,
    pub r_l: f64,
    pub abs_flow_mw: f64,
    pub energized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSet {
    pub scenario: String,
    pub method: Method,
    pub parameter: f64,
    pub rows: Vec<ScatterRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub parameter: f64,
    pub r_fire: f64,
    pub d_tot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFrontEntry {
    pub method: Method,
    pub points: Vec<FrontPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub method: Method,
    pub points: usize,
    pub failed: usize,
    pub network_fingerprint: String,
    pub risk_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub total_demand_mw: f64,
    pub standard_risk: f64,
    pub operating_points: Vec<OperatingPoint>,
    pub risk_by_component_type: Vec<RiskByType>,
    pub line_scatter: Vec<ScatterSet>,
    pub pareto_fronts: Vec<ParetoFrontEntry>,
    pub sweeps: Vec<SweepSummary>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// The successful point whose risk is closest to `target_risk`; ties go to
/// the smaller parameter.
pub fn select_operating_point(sweep: &SweepResult, target_risk: f64) -> Option<&TradeoffPoint> {
    sweep.points.iter().filter(|p| p.is_ok()).min_by(|a, b| {
        (a.r_fire - target_risk)
            .abs()
            .total_cmp(&(b.r_fire - target_risk).abs())
            .then(a.parameter.total_cmp(&b.parameter))
    })
}

/// Per-line risk and carried power for one plan.
pub fn scatter_rows(network: &Network, risk: &RiskTable, plan: &ShutoffPlan) -> Vec<ScatterRow> {
    network
        .lines()
        .iter()
        .zip(risk.line_risk())
        .zip(&plan.lines)
        .map(|((line, &r_l), st)| ScatterRow {
            line_id: line.id,
            r_l,
            abs_flow_mw: st.flow_mw.abs(),
            energized: st.on,
        })
        .collect()
}

/// `line_id,r_l,abs_flow_mw,energized` table.
pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("line_id,r_l,abs_flow_mw,energized\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.line_id, r.r_l, r.abs_flow_mw, r.energized
        ));
    }
    out
}

/// Builds the report from finished sweeps and the standard-operation point.
/// Solve times are included only with `timing`.
pub fn compare_report(
    network: &Network,
    risk: &RiskTable,
    sweeps: &[SweepResult],
    standard: &TradeoffPoint,
    timing: bool,
) -> ComparisonReport {
    let mut report = ComparisonReport {
        total_demand_mw: network.total_demand_mw(),
        standard_risk: standard.r_fire,
        operating_points: Vec::new(),
        risk_by_component_type: Vec::new(),
        line_scatter: Vec::new(),
        pareto_fronts: Vec::new(),
        sweeps: Vec::new(),
    };
    let mut add = |scenario: &str, p: &TradeoffPoint| {
        report.operating_points.push(OperatingPoint {
            scenario: scenario.to_string(),
            method: p.method,
            parameter: p.parameter,
            total_risk: p.r_fire,
            load_served_mw: p.d_tot,
            solve_time_s: if timing { p.solve_time_s } else { None },
        });
        if let Some(plan) = &p.plan {
            let b = plan.risk_breakdown(network, risk);
            report.risk_by_component_type.push(RiskByType {
                scenario: scenario.to_string(),
                method: p.method,
                parameter: p.parameter,
                total: b.total,
                bus: b.bus,
                line: b.line,
                gen: b.gen,
                load: b.load,
            });
            report.line_scatter.push(ScatterSet {
                scenario: scenario.to_string(),
                method: p.method,
                parameter: p.parameter,
                rows: scatter_rows(network, risk, plan),
            });
        }
    };
    add("standard", standard);
    for (scenario, fraction) in [("medium", MEDIUM_RISK_FRACTION), ("low", LOW_RISK_FRACTION)] {
        for sweep in sweeps {
            if let Some(p) = select_operating_point(sweep, fraction * standard.r_fire) {
                add(scenario, p);
            }
        }
    }
    for sweep in sweeps {
        report.pareto_fronts.push(ParetoFrontEntry {
            method: sweep.method,
            points: pareto_front(&sweep.points)
                .into_iter()
                .map(|p| FrontPoint {
                    parameter: p.parameter,
                    r_fire: p.r_fire,
                    d_tot: p.d_tot,
                })
                .collect(),
        });
        report.sweeps.push(SweepSummary {
            method: sweep.method,
            points: sweep.points.len(),
            failed: sweep.failures(),
            network_fingerprint: sweep.network_fingerprint.clone(),
            risk_fingerprint: sweep.risk_fingerprint.clone(),
        });
    }
    report
}
