//! Connected components of the energized grid.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ComponentKind, ComponentRef, Network};

/// On/off state of every component, indexed like the network's vectors.
/// Load entries hold the served fraction x_d; a load counts as energized
/// when x_d > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energization {
    pub bus: Vec<bool>,
    pub line: Vec<bool>,
    pub generator: Vec<bool>,
    pub load: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("state does not cover {0}")]
    Missing(ComponentRef),
    #[error("state has {got} {kind} entries, network has {expected}")]
    Length {
        kind: ComponentKind,
        got: usize,
        expected: usize,
    },
}

impl Energization {
    pub fn all_on(network: &Network) -> Self {
        Energization {
            bus: vec![true; network.buses().len()],
            line: vec![true; network.lines().len()],
            generator: vec![true; network.generators().len()],
            load: vec![1.0; network.loads().len()],
        }
    }

    pub fn all_off(network: &Network) -> Self {
        Energization {
            bus: vec![false; network.buses().len()],
            line: vec![false; network.lines().len()],
            generator: vec![false; network.generators().len()],
            load: vec![0.0; network.loads().len()],
        }
    }

    /// Builds a state from per-component values (1.0 / 0.0 for binary
    /// components, x_d for loads). Every component must be present.
    pub fn from_map(
        network: &Network,
        values: &BTreeMap<ComponentRef, f64>,
    ) -> Result<Self, StateError> {
        let get = |c: ComponentRef| values.get(&c).copied().ok_or(StateError::Missing(c));
        let mut state = Energization::all_off(network);
        for (i, b) in network.buses().iter().enumerate() {
            state.bus[i] = get(ComponentRef::bus(b.id))? > 0.5;
        }
        for (i, l) in network.lines().iter().enumerate() {
            state.line[i] = get(ComponentRef::line(l.id))? > 0.5;
        }
        for (i, g) in network.generators().iter().enumerate() {
            state.generator[i] = get(ComponentRef::generator(g.id))? > 0.5;
        }
        for (i, d) in network.loads().iter().enumerate() {
            state.load[i] = get(ComponentRef::load(d.id))?;
        }
        Ok(state)
    }

    /// Confirms the state has exactly one entry per network component.
    pub fn check_covers(&self, network: &Network) -> Result<(), StateError> {
        let checks = [
            (ComponentKind::Bus, self.bus.len(), network.buses().len()),
            (ComponentKind::Line, self.line.len(), network.lines().len()),
            (
                ComponentKind::Generator,
                self.generator.len(),
                network.generators().len(),
            ),
            (ComponentKind::Load, self.load.len(), network.loads().len()),
        ];
        for (kind, got, expected) in checks {
            if got != expected {
                return Err(StateError::Length {
                    kind,
                    got,
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// One connected component of energized buses and the energized equipment
/// attached to it. Ids appear in network declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Island {
    pub buses: Vec<u32>,
    pub lines: Vec<u32>,
    pub generators: Vec<u32>,
    pub loads: Vec<u32>,
}

/// Partitions the energized buses into islands joined by energized lines.
/// A line counts only when both of its end buses are energized; islands are
/// ordered by their first bus.
pub fn energized_islands(
    network: &Network,
    state: &Energization,
) -> Result<Vec<Island>, StateError> {
    state.check_covers(network)?;
    let n = network.buses().len();
    let mut uf = UnionFind::<usize>::new(n);
    for (l, on) in state.line.iter().enumerate() {
        let (f, t) = network.line_ends(l);
        if *on && state.bus[f] && state.bus[t] {
            uf.union(f, t);
        }
    }

    let mut slot_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut slot_of_bus = vec![usize::MAX; n];
    let mut islands: Vec<Island> = Vec::new();
    for (b, bus) in network.buses().iter().enumerate() {
        if !state.bus[b] {
            continue;
        }
        let root = uf.find(b);
        let slot = *slot_of_root.entry(root).or_insert_with(|| {
            islands.push(Island {
                buses: Vec::new(),
                lines: Vec::new(),
                generators: Vec::new(),
                loads: Vec::new(),
            });
            islands.len() - 1
        });
        slot_of_bus[b] = slot;
        islands[slot].buses.push(bus.id);
    }
    for (l, line) in network.lines().iter().enumerate() {
        let (f, t) = network.line_ends(l);
        if state.line[l] && state.bus[f] && state.bus[t] {
            islands[slot_of_bus[f]].lines.push(line.id);
        }
    }
    for (g, gen) in network.generators().iter().enumerate() {
        let b = network.gen_bus_idx(g);
        if state.generator[g] && state.bus[b] {
            islands[slot_of_bus[b]].generators.push(gen.id);
        }
    }
    for (d, load) in network.loads().iter().enumerate() {
        let b = network.load_bus_idx(d);
        if state.load[d] > 0.0 && state.bus[b] {
            islands[slot_of_bus[b]].loads.push(load.id);
        }
    }
    Ok(islands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::triangle;

    #[test]
    fn triangle_all_on_is_one_island() {
        let net = triangle();
        let islands = energized_islands(&net, &Energization::all_on(&net)).unwrap();
        assert_eq!(islands.len(), 1);
        assert_eq!(islands[0].buses, [1, 2, 3]);
        assert_eq!(islands[0].lines, [1, 2, 3]);
        assert_eq!(islands[0].generators, [1]);
        assert_eq!(islands[0].loads, [1, 2]);
    }

    #[test]
    fn triangle_without_lines_is_three_singletons() {
        let net = triangle();
        let mut state = Energization::all_on(&net);
        state.line = vec![false; 3];
        let islands = energized_islands(&net, &state).unwrap();
        let sizes: Vec<_> = islands.iter().map(|i| i.buses.len()).collect();
        assert_eq!(sizes, [1, 1, 1]);
    }

    #[test]
    fn dead_buses_are_excluded() {
        let net = triangle();
        let mut state = Energization::all_on(&net);
        state.bus[1] = false;
        let islands = energized_islands(&net, &state).unwrap();
        assert_eq!(islands.len(), 1);
        assert_eq!(islands[0].buses, [1, 3]);
        assert_eq!(islands[0].lines, [3]);
        assert_eq!(islands[0].loads, [2]);
    }

    #[test]
    fn short_state_is_rejected() {
        let net = triangle();
        let mut state = Energization::all_on(&net);
        state.line.pop();
        assert!(matches!(
            energized_islands(&net, &state),
            Err(StateError::Length { .. })
        ));
    }

    #[test]
    fn from_map_names_missing_component() {
        let net = triangle();
        let mut values: BTreeMap<_, _> = net.components().into_iter().map(|c| (c, 1.0)).collect();
        values.remove(&ComponentRef::line(2));
        assert_eq!(
            Energization::from_map(&net, &values),
            Err(StateError::Missing(ComponentRef::line(2)))
        );
    }
}
