//! The bundled case against values recomputed by `tools/golden_risk.py`.

mod common;

use common::{bundled, data_dir};
use gridshed::mld::{area_heuristic, triggered_areas};
use gridshed::network::{parse_case, serialize_case};
use gridshed::risk::area_risk_total;
use serde_json::Value;

fn golden() -> Value {
    let text = std::fs::read_to_string(data_dir().join("golden").join("rts73_risk.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn bundled_case_shape() {
    let inst = bundled();
    assert_eq!(inst.network.buses().len(), 73);
    assert_eq!(inst.network.lines().len(), 120);
    assert_eq!(inst.network.generators().len(), 96);
    assert!(close(inst.network.total_demand_mw(), 8550.0));
}

#[test]
fn bundled_case_round_trips() {
    let inst = bundled();
    let text = serialize_case(&inst.network);
    let again = parse_case(&text).unwrap();
    assert_eq!(again.data(), inst.network.data());
    assert_eq!(serialize_case(&again), text);
}

#[test]
fn risk_table_matches_golden() {
    let inst = bundled();
    let g = golden();
    let entries = inst.risk.entries();
    let expected = g["components"].as_array().unwrap();
    assert_eq!(entries.len(), expected.len());
    for (e, x) in entries.iter().zip(expected) {
        assert_eq!(e.component.kind.as_str(), x["kind"].as_str().unwrap());
        assert_eq!(e.component.id as u64, x["id"].as_u64().unwrap());
        assert!(
            close(e.value, x["risk"].as_f64().unwrap()),
            "{}: {} vs {}",
            e.component,
            e.value,
            x["risk"]
        );
    }
    assert!(close(inst.risk.total(), g["total_risk"].as_f64().unwrap()));
    assert!(close(
        inst.risk.max_line_risk(),
        g["max_line_risk"].as_f64().unwrap()
    ));
}

#[test]
fn area_totals_match_golden() {
    let inst = bundled();
    for a in golden()["area_totals"].as_array().unwrap() {
        let id = a["area_id"].as_u64().unwrap() as u32;
        let got = area_risk_total(&inst.risk, &inst.network, id).unwrap();
        assert!(close(got, a["total"].as_f64().unwrap()), "area {id}: {got}");
    }
}

#[test]
fn area_heuristic_at_30_selects_the_western_region() {
    let inst = bundled();
    let g = golden();
    let threshold = g["area_threshold"].as_f64().unwrap();
    assert_eq!(threshold, 30.0);
    let hot: Vec<u64> = triggered_areas(&inst.network, &inst.risk, threshold)
        .into_iter()
        .map(u64::from)
        .collect();
    let expected: Vec<u64> = g["triggered_areas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(hot, expected);
    for id in &hot {
        assert!(inst
            .network
            .area(*id as u32)
            .unwrap()
            .name
            .starts_with("west"));
    }
    let set = area_heuristic(&inst.network, &inst.risk, threshold);
    let got: Vec<String> = set.components().iter().map(|c| c.to_string()).collect();
    let expected: Vec<String> = g["area_heuristic_components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn transmission_pipeline_at_18_9_matches_golden() {
    use gridshed::milp::{BackendRegistry, SolveOptions};
    use gridshed::mld::{run_heuristic_pipeline, HeuristicKind};

    let text = std::fs::read_to_string(
        data_dir()
            .join("golden")
            .join("rts73_transmission_18_9.json"),
    )
    .unwrap();
    let expected: Value = serde_json::from_str(&text).unwrap();
    let inst = bundled();
    let backend = BackendRegistry::with_defaults()
        .get(BackendRegistry::default_name())
        .unwrap();
    let threshold = expected["threshold"].as_f64().unwrap();
    let plan = run_heuristic_pipeline(
        &inst.network,
        &inst.risk,
        HeuristicKind::Transmission,
        threshold,
        backend.as_ref(),
        &SolveOptions::tight(),
    )
    .unwrap();
    assert_eq!(
        plan.forced_off.as_ref().map(Vec::len),
        expected["forced_off"].as_u64().map(|n| n as usize)
    );
    assert!(
        (plan.d_tot - expected["d_tot_mw"].as_f64().unwrap()).abs() <= 1e-6,
        "d_tot {}",
        plan.d_tot
    );
    assert!(
        (plan.r_fire - expected["r_fire"].as_f64().unwrap()).abs() <= 1e-6,
        "r_fire {}",
        plan.r_fire
    );
    assert_eq!(
        plan.lines.iter().filter(|l| !l.on).count() as u64,
        expected["lines_off"].as_u64().unwrap()
    );
    assert_eq!(
        plan.buses.iter().filter(|b| !b.on).count() as u64,
        expected["buses_off"].as_u64().unwrap()
    );
}
