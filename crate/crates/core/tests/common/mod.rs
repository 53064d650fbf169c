//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls into the crate's solver, island or Pareto code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::{Path, PathBuf};

use gridshed::network::Network;
use gridshed::risk::RiskTable;
use microlp::{ComparisonOp, OptimizationDirection, Problem};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub struct Instance {
    pub name: String,
    pub network: Network,
    pub risk: RiskTable,
}

fn load(case: &Path, risk: &Path) -> Instance {
    let mut sink = Vec::new();
    let network = gridshed::cli::load_case(case, &mut sink).unwrap_or_else(|e| panic!("{e}"));
    let risk = gridshed::cli::load_risk(risk, &network).unwrap_or_else(|e| panic!("{e}"));
    let name = case.file_stem().unwrap().to_string_lossy().into_owned();
    Instance {
        name,
        network,
        risk,
    }
}

/// Every corpus case, sorted by name. Each `x.json` or `x.m` pairs with
/// `x_risk.json`.
pub fn corpus() -> Vec<Instance> {
    let dir = data_dir().join("corpus");
    let mut cases: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy();
            !stem.ends_with("_risk")
                && matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "m"))
        })
        .collect();
    cases.sort();
    cases
        .iter()
        .map(|c| {
            let stem = c.file_stem().unwrap().to_string_lossy();
            load(c, &dir.join(format!("{stem}_risk.json")))
        })
        .collect()
}

pub fn bundled() -> Instance {
    let dir = data_dir();
    load(&dir.join("rts73.json"), &dir.join("rts73_risk.json"))
}

pub fn binary_count(network: &Network) -> usize {
    network.buses().len() + network.lines().len() + network.generators().len()
}

/// Best objective of the shut-off problem by enumeration: every
/// energization pattern consistent with bus coupling and `forced_off` is
/// fixed and the remaining dispatch LP solved from scratch. Angles are
/// free, so the result also checks the angle box used by the MILP.
pub struct Enumeration {
    pub objective: f64,
    pub load_mw: f64,
    pub patterns: usize,
}

pub fn enumerate(
    network: &Network,
    risk: &RiskTable,
    alpha: f64,
    forced_off: &BTreeSet<(char, u32)>,
) -> Enumeration {
    let buses = network.buses();
    let lines = network.lines();
    let gens = network.generators();
    let loads = network.loads();
    let bus_pos: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let nb = buses.len();
    let nl = lines.len();
    let ng = gens.len();
    let total = nb + nl + ng;
    assert!(
        total <= 20,
        "enumeration is exponential in the binary count"
    );
    let base = network.base_mva();
    let mut best = Enumeration {
        objective: f64::NEG_INFINITY,
        load_mw: 0.0,
        patterns: 0,
    };

    'pattern: for mask in 0u32..(1 << total) {
        let on = |k: usize| mask >> k & 1 == 1;
        let bus_on: Vec<bool> = (0..nb).map(on).collect();
        let line_on: Vec<bool> = (0..nl).map(|l| on(nb + l)).collect();
        let gen_on: Vec<bool> = (0..ng).map(|g| on(nb + nl + g)).collect();
        for (i, b) in buses.iter().enumerate() {
            if bus_on[i] && forced_off.contains(&('b', b.id)) {
                continue 'pattern;
            }
        }
        for (l, line) in lines.iter().enumerate() {
            if line_on[l]
                && (forced_off.contains(&('l', line.id))
                    || !bus_on[bus_pos[&line.from_bus]]
                    || !bus_on[bus_pos[&line.to_bus]])
            {
                continue 'pattern;
            }
        }
        for (g, gen) in gens.iter().enumerate() {
            if gen_on[g] && (forced_off.contains(&('g', gen.id)) || !bus_on[bus_pos[&gen.bus]]) {
                continue 'pattern;
            }
        }
        best.patterns += 1;

        let mut constant = 0.0;
        for (i, r) in risk.bus_risk().iter().enumerate() {
            if bus_on[i] {
                constant -= alpha * r;
            }
        }
        for (l, r) in risk.line_risk().iter().enumerate() {
            if line_on[l] {
                constant -= alpha * r;
            }
        }
        for (g, r) in risk.generator_risk().iter().enumerate() {
            if gen_on[g] {
                constant -= alpha * r;
            }
        }

        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let mut injection: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); nb];
        let mut x_vars = Vec::new();
        for (d, load) in loads.iter().enumerate() {
            let b = bus_pos[&load.bus];
            let ub = if bus_on[b] && !forced_off.contains(&('d', load.id)) {
                1.0
            } else {
                0.0
            };
            let c = (1.0 - alpha) * load.weight * load.demand_mw - alpha * risk.load_risk()[d];
            let x = lp.add_var(c, (0.0, ub));
            injection[b].push((x, -load.demand_mw));
            x_vars.push((x, load.demand_mw));
        }
        for (g, gen) in gens.iter().enumerate() {
            let (lo, hi) = if gen_on[g] {
                (gen.p_min_mw, gen.p_max_mw)
            } else {
                (0.0, 0.0)
            };
            let p = lp.add_var(0.0, (lo, hi));
            injection[bus_pos[&gen.bus]].push((p, 1.0));
        }
        let theta: Vec<_> = (0..nb)
            .map(|i| {
                if bus_on[i] {
                    lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))
                } else {
                    lp.add_var(0.0, (0.0, 0.0))
                }
            })
            .collect();
        for (l, line) in lines.iter().enumerate() {
            if !line_on[l] {
                continue;
            }
            let (f, t) = (bus_pos[&line.from_bus], bus_pos[&line.to_bus]);
            let s = line.susceptance_pu * base;
            let p = lp.add_var(0.0, (-line.thermal_limit_mw, line.thermal_limit_mw));
            lp.add_constraint(
                [(p, 1.0), (theta[f], -s), (theta[t], s)],
                ComparisonOp::Eq,
                0.0,
            );
            injection[f].push((p, -1.0));
            injection[t].push((p, 1.0));
        }
        for terms in injection.into_iter().filter(|t| !t.is_empty()) {
            lp.add_constraint(terms, ComparisonOp::Eq, 0.0);
        }
        let Ok(sol) = lp.solve() else { continue };
        let objective = sol.objective() + constant;
        if objective > best.objective {
            best.objective = objective;
            best.load_mw = x_vars.iter().map(|&(x, d)| sol.var_value(x) * d).sum();
        }
    }
    best
}

/// Connected components of the energized subgraph by breadth-first search.
/// Each island is a sorted list of bus ids; islands are sorted by first id.
pub fn bfs_islands(network: &Network, bus_on: &[bool], line_on: &[bool]) -> Vec<Vec<u32>> {
    let buses = network.buses();
    let pos: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut adj = vec![Vec::new(); buses.len()];
    for (l, line) in network.lines().iter().enumerate() {
        let (f, t) = (pos[&line.from_bus], pos[&line.to_bus]);
        if line_on[l] && bus_on[f] && bus_on[t] {
            adj[f].push(t);
            adj[t].push(f);
        }
    }
    let mut seen = vec![false; buses.len()];
    let mut islands = Vec::new();
    for start in 0..buses.len() {
        if seen[start] || !bus_on[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(u) = queue.pop_front() {
            members.push(buses[u].id);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        islands.push(members);
    }
    islands.sort();
    islands
}

/// Indices of points no other point dominates (lower or equal risk and
/// higher or equal load, strictly better in one), with exact duplicates
/// reduced to their first occurrence. Quadratic on purpose.
pub fn brute_force_front(points: &[(f64, f64)]) -> Vec<usize> {
    let mut keep = Vec::new();
    for (i, &(ri, di)) in points.iter().enumerate() {
        let dominated = points
            .iter()
            .enumerate()
            .any(|(j, &(rj, dj))| j != i && rj <= ri && dj >= di && (rj < ri || dj > di));
        let duplicate = points[..i].iter().any(|&(rj, dj)| rj == ri && dj == di);
        if !dominated && !duplicate {
            keep.push(i);
        }
    }
    keep
}
