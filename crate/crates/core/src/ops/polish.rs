//! Turns a solver point into an exactly consistent plan: binaries rounded,
//! coupling enforced, each island balanced and its flows recomputed from
//! DC angles.

use crate::linalg;
use crate::network::{energized_islands, Energization, Network};

/// Plan arrays in network order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawPlan {
    pub z_bus: Vec<bool>,
    pub z_gen: Vec<bool>,
    pub z_line: Vec<bool>,
    pub x_load: Vec<f64>,
    pub p_gen: Vec<f64>,
    pub p_line: Vec<f64>,
    pub theta: Vec<f64>,
}

const SNAP: f64 = 1e-9;

impl RawPlan {
    pub fn energization(&self) -> Energization {
        Energization {
            bus: self.z_bus.clone(),
            line: self.z_line.clone(),
            generator: self.z_gen.clone(),
            load: self.x_load.clone(),
        }
    }
}

fn snap_unit(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x < SNAP {
        0.0
    } else if x > 1.0 - SNAP {
        1.0
    } else {
        x
    }
}

pub(crate) fn polish(network: &Network, raw: &mut RawPlan, theta_max: f64) {
    for (l, on) in raw.z_line.iter_mut().enumerate() {
        let (f, t) = network.line_ends(l);
        *on = *on && raw.z_bus[f] && raw.z_bus[t];
    }
    for (g, on) in raw.z_gen.iter_mut().enumerate() {
        *on = *on && raw.z_bus[network.gen_bus_idx(g)];
    }
    for (d, x) in raw.x_load.iter_mut().enumerate() {
        *x = if raw.z_bus[network.load_bus_idx(d)] {
            snap_unit(*x)
        } else {
            0.0
        };
    }
    for (g, gen) in network.generators().iter().enumerate() {
        raw.p_gen[g] = if raw.z_gen[g] {
            raw.p_gen[g].clamp(gen.p_min_mw, gen.p_max_mw)
        } else {
            0.0
        };
    }
    for (l, on) in raw.z_line.iter().enumerate() {
        if !on {
            raw.p_line[l] = 0.0;
        }
    }
    for (i, on) in raw.z_bus.iter().enumerate() {
        if !on {
            raw.theta[i] = 0.0;
        }
    }

    let islands =
        energized_islands(network, &raw.energization()).expect("arrays sized from the network");
    for island in &islands {
        let buses: Vec<usize> = island
            .buses
            .iter()
            .map(|&id| network.bus_idx(id).expect("island bus"))
            .collect();
        let gens: Vec<usize> = island
            .generators
            .iter()
            .map(|&id| network.gen_idx(id).expect("island gen"))
            .collect();
        let loads: Vec<usize> = island
            .loads
            .iter()
            .map(|&id| network.load_idx(id).expect("island load"))
            .collect();
        let lines: Vec<usize> = island
            .lines
            .iter()
            .map(|&id| network.line_idx(id).expect("island line"))
            .collect();
        balance(network, raw, &gens, &loads);
        recompute_flows(network, raw, &buses, &lines, theta_max);
    }
}

/// Absorbs generation/load mismatch: first by generator redispatch within
/// limits, then by adjusting served fractions.
fn balance(network: &Network, raw: &mut RawPlan, gens: &[usize], loads: &[usize]) {
    let gen_total: f64 = gens.iter().map(|&g| raw.p_gen[g]).sum();
    let load_total: f64 = loads
        .iter()
        .map(|&d| raw.x_load[d] * network.loads()[d].demand_mw)
        .sum();
    let mut surplus = gen_total - load_total;
    if surplus == 0.0 {
        return;
    }
    for &g in gens {
        let gen = &network.generators()[g];
        let p = raw.p_gen[g];
        let target = (p - surplus).clamp(gen.p_min_mw, gen.p_max_mw);
        surplus -= p - target;
        raw.p_gen[g] = target;
        if surplus == 0.0 {
            return;
        }
    }
    for &d in loads {
        let demand = network.loads()[d].demand_mw;
        if demand <= 0.0 {
            continue;
        }
        let x = raw.x_load[d];
        let target = (x + surplus / demand).clamp(0.0, 1.0);
        surplus -= (target - x) * demand;
        raw.x_load[d] = target;
        if surplus == 0.0 {
            return;
        }
    }
}

/// Solves the reduced Laplacian for the island's angles, keeping the first
/// bus at its current angle, and sets every live flow to s·(θ_f − θ_t).
fn recompute_flows(
    network: &Network,
    raw: &mut RawPlan,
    buses: &[usize],
    lines: &[usize],
    theta_max: f64,
) {
    if buses.len() < 2 {
        return;
    }
    let base = network.base_mva();
    let k = buses.len() - 1;
    let slot = |bus: usize| buses.iter().position(|&b| b == bus);
    let mut lap = vec![0.0; k * k];
    let mut inj = vec![0.0; k];
    for (pos, &b) in buses.iter().enumerate().skip(1) {
        let r = pos - 1;
        inj[r] = network
            .generators_at(b)
            .iter()
            .map(|&g| raw.p_gen[g])
            .sum::<f64>()
            - network
                .loads_at(b)
                .iter()
                .map(|&d| raw.x_load[d] * network.loads()[d].demand_mw)
                .sum::<f64>();
    }
    let reference = raw.theta[buses[0]];
    for &l in lines {
        let (f, t) = network.line_ends(l);
        let s = network.lines()[l].susceptance_pu * base;
        let (sf, st) = (slot(f).expect("island line"), slot(t).expect("island line"));
        for (a, b) in [(sf, st), (st, sf)] {
            if a == 0 {
                continue;
            }
            lap[(a - 1) * k + (a - 1)] += s;
            if b == 0 {
                inj[a - 1] += s * reference;
            } else {
                lap[(a - 1) * k + (b - 1)] -= s;
            }
        }
    }
    let Some(rel) = linalg::solve(lap, inj, k) else {
        return;
    };
    raw.theta[buses[0]] = reference;
    for (r, &b) in buses.iter().skip(1).enumerate() {
        raw.theta[b] = rel[r];
    }
    let (lo, hi) = buses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| {
            (lo.min(raw.theta[b]), hi.max(raw.theta[b]))
        });
    if lo < -theta_max || hi > theta_max {
        let shift = (lo + hi) / 2.0;
        for &b in buses {
            raw.theta[b] -= shift;
        }
    }
    for &l in lines {
        let (f, t) = network.line_ends(l);
        let s = network.lines()[l].susceptance_pu * base;
        raw.p_line[l] = s * (raw.theta[f] - raw.theta[t]);
    }
}
