//! Best-bound branch-and-bound over the bounded-variable simplex.
//!
//! Branching uses pseudocosts: the mean objective gain per unit change seen
//! so far when each binary was rounded down or up. Unseen directions take
//! the mean over seen ones. The score is the product of the two estimated
//! gains, lowest index on ties. Child LPs start from the parent's basis. Whenever an LP solution is integral,
//! or at periodic rounding attempts, every binary is fixed at its rounded
//! value and the LP is re-solved so incumbents are exactly integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{Basis, LpModel, LpStatus, Simplex};
use super::{
    MilpBackend, MilpProblem, MilpSolution, SolveOptions, SolveStats, SolveStatus, VarKind,
};

const ROUNDING_EVERY: u64 = 16;

/// The built-in backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceBackend;

impl MilpBackend for ReferenceBackend {
    fn name(&self) -> &str {
        "reference"
    }

    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> MilpSolution {
        branch_and_bound(problem, options)
    }
}

struct Node {
    id: u64,
    depth: u32,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
    /// Branched variable, direction (true for up) and distance moved.
    branch: Option<(usize, bool, f64)>,
}

/// Per-variable sums and counts of objective gain per unit change.
struct Pseudocosts {
    sum: Vec<[f64; 2]>,
    count: Vec<[u32; 2]>,
}

impl Pseudocosts {
    fn new(n: usize) -> Self {
        Pseudocosts {
            sum: vec![[0.0; 2]; n],
            count: vec![[0; 2]; n],
        }
    }

    fn record(&mut self, j: usize, up: bool, distance: f64, gain: f64) {
        if distance > 0.0 && gain.is_finite() {
            let d = usize::from(up);
            self.sum[j][d] += gain.max(0.0) / distance;
            self.count[j][d] += 1;
        }
    }

    fn means(&self) -> [f64; 2] {
        let mut out = [1.0; 2];
        for (d, slot) in out.iter_mut().enumerate() {
            let (s, c) = self
                .sum
                .iter()
                .zip(&self.count)
                .filter(|(_, c)| c[d] > 0)
                .fold((0.0, 0u32), |(s, n), (v, c)| {
                    (s + v[d] / c[d] as f64, n + 1)
                });
            if c > 0 {
                *slot = s / c as f64;
            }
        }
        out
    }

    fn estimate(&self, j: usize, up: bool, fallback: &[f64; 2]) -> f64 {
        let d = usize::from(up);
        if self.count[j][d] > 0 {
            self.sum[j][d] / self.count[j][d] as f64
        } else {
            fallback[d]
        }
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    problem: &'a MilpProblem,
    model: &'a LpModel,
    simplex: Simplex<'a>,
    binaries: Vec<usize>,
    iteration_limit: u64,
    lp_solves: u64,
    incumbent: Option<(f64, Vec<f64>)>,
    trouble: Option<String>,
}

impl<'a> Search<'a> {
    fn load(&mut self, fixings: &[(usize, f64)], basis: Option<&Basis>) {
        self.simplex.reset_structural_bounds();
        for &(j, v) in fixings {
            self.simplex.set_structural_bounds(j, v, v);
        }
        if let Some(b) = basis {
            self.simplex.set_basis(b);
        }
    }

    fn run_lp(&mut self) -> LpStatus {
        self.lp_solves += 1;
        let status = self.simplex.solve(self.iteration_limit);
        if matches!(status, LpStatus::IterationLimit | LpStatus::Singular) {
            self.lp_solves += 1;
            self.simplex.set_cold_basis();
            let retry = self.simplex.solve(self.iteration_limit);
            if matches!(retry, LpStatus::IterationLimit | LpStatus::Singular) {
                self.trouble = Some(format!("LP relaxation failed: {retry:?}"));
            }
            return retry;
        }
        status
    }

    fn gap_closed(&self, options: &SolveOptions, incumbent: f64, bound: f64) -> bool {
        incumbent - bound
            <= options
                .absolute_gap
                .max(options.relative_gap * incumbent.abs())
    }

    /// Fixes every binary at `rounded` and keeps the resulting point if it is
    /// feasible and better than the incumbent.
    fn try_fixed(&mut self, rounded: &[f64], fallback: Option<(f64, Vec<f64>)>) {
        let fixings: Vec<(usize, f64)> = self.binaries.iter().map(|&j| (j, rounded[j])).collect();
        let basis = self.simplex.basis();
        self.load(&fixings, Some(&basis));
        let candidate = match self.run_lp() {
            LpStatus::Optimal => Some((self.simplex.objective(), self.simplex.structural_values())),
            _ => fallback,
        };
        if let Some((obj, values)) = candidate {
            if self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                self.incumbent = Some((obj, values));
            }
        }
    }
}

fn branching_variable(
    values: &[f64],
    binaries: &[usize],
    tol: f64,
    costs: &Pseudocosts,
) -> Option<usize> {
    const FLOOR: f64 = 1e-6;
    let fallback = costs.means();
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let down = values[j] - values[j].floor();
        let up = values[j].ceil() - values[j];
        if down.min(up) <= tol {
            continue;
        }
        let score = (costs.estimate(j, false, &fallback) * down).max(FLOOR)
            * (costs.estimate(j, true, &fallback) * up).max(FLOOR);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn branch_and_bound(problem: &MilpProblem, options: &SolveOptions) -> MilpSolution {
    let start = Instant::now();
    let mut stats = SolveStats {
        backend: "reference".into(),
        ..SolveStats::default()
    };
    if let Err(e) = problem.validate() {
        return MilpSolution::without_values(
            SolveStatus::NumericalError {
                diagnostic: format!("invalid problem: {e}"),
            },
            stats,
        );
    }

    let model = LpModel::from_problem(problem);
    let binaries: Vec<usize> = problem
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let mut search = Search {
        problem,
        model: &model,
        simplex: Simplex::new(&model),
        binaries,
        iteration_limit: 50 * (model.n + model.m) as u64 + 10_000,
        lp_solves: 0,
        incumbent: None,
        trouble: None,
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
        basis: None,
        branch: None,
    });
    let mut costs = Pseudocosts::new(problem.variables.len());
    let mut next_id = 1;
    let mut nodes = 0u64;
    let mut limit_hit = false;
    let mut unbounded = false;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &search.incumbent {
            if search.gap_closed(options, *inc, node.bound) {
                heap.clear();
                break;
            }
        }
        let over_time = options
            .time_limit_s
            .is_some_and(|t| start.elapsed().as_secs_f64() >= t);
        let over_nodes = options.node_limit.is_some_and(|n| nodes >= n);
        if over_time || over_nodes {
            limit_hit = true;
            break;
        }
        nodes += 1;

        search.load(&node.fixings, node.basis.as_ref());
        match search.run_lp() {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => {
                if node.depth == 0 {
                    unbounded = true;
                    break;
                }
                continue;
            }
            _ => continue,
        }
        let obj = search.simplex.objective();
        if let Some((j, up, distance)) = node.branch {
            costs.record(j, up, distance, obj - node.bound);
        }
        if let Some((inc, _)) = &search.incumbent {
            if search.gap_closed(options, *inc, obj) {
                continue;
            }
        }
        let values = search.simplex.structural_values();

        let Some(j) =
            branching_variable(&values, &search.binaries, options.integrality_tol, &costs)
        else {
            let rounded: Vec<f64> = values.iter().map(|v| v.round()).collect();
            if node.fixings.len() == search.binaries.len() {
                if search
                    .incumbent
                    .as_ref()
                    .is_none_or(|(best, _)| obj < *best)
                {
                    search.incumbent = Some((obj, values));
                }
            } else {
                search.try_fixed(&rounded, Some((obj, values)));
            }
            continue;
        };

        let basis = search.simplex.basis();
        if nodes == 1 || nodes.is_multiple_of(ROUNDING_EVERY) {
            let rounded: Vec<f64> = values.iter().map(|v| v.round()).collect();
            search.try_fixed(&rounded, None);
        }

        let up_first = values[j] >= 0.5;
        for value in if up_first { [1.0, 0.0] } else { [0.0, 1.0] } {
            let mut fixings = node.fixings.clone();
            fixings.push((j, value));
            let distance = (value - values[j]).abs();
            heap.push(Node {
                id: next_id,
                depth: node.depth + 1,
                bound: obj,
                fixings,
                basis: Some(basis.clone()),
                branch: Some((j, value == 1.0, distance)),
            });
            next_id += 1;
        }
    }

    stats.nodes = nodes;
    stats.lp_solves = search.lp_solves;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    let sign = search.model.sign;
    let constant = search.problem.objective.constant;

    if unbounded {
        return MilpSolution::without_values(SolveStatus::Unbounded, stats);
    }
    let Some((obj, values)) = search.incumbent else {
        let status = if limit_hit {
            SolveStatus::LimitHit
        } else if let Some(diagnostic) = search.trouble {
            SolveStatus::NumericalError { diagnostic }
        } else {
            SolveStatus::Infeasible
        };
        return MilpSolution::without_values(status, stats);
    };
    let status = if limit_hit {
        SolveStatus::LimitHit
    } else if search.trouble.is_some() {
        SolveStatus::Feasible { gap: f64::NAN }
    } else {
        SolveStatus::Optimal
    };
    MilpSolution {
        status,
        objective: sign * obj + constant,
        values,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{ConstraintSense as S, ObjectiveSense};

    #[test]
    fn knapsack_pair() {
        // max 2a + b, a + b <= 1
        let mut p = MilpProblem::new("t", ObjectiveSense::Maximize);
        let a = p.add_binary("a");
        let b = p.add_binary("b");
        p.add_constraint("c", vec![(a, 1.0), (b, 1.0)], S::Le, 1.0);
        p.set_objective_term(a, 2.0);
        p.set_objective_term(b, 1.0);
        let s = branch_and_bound(&p, &SolveOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, 2.0);
        assert_eq!(s.values, [1.0, 0.0]);
    }

    #[test]
    fn fractional_relaxation_is_branched() {
        // max 5a + 4b + 3c, 2a + 3b + c <= 4.5, binaries
        let mut p = MilpProblem::new("t", ObjectiveSense::Maximize);
        let v: Vec<_> = ["a", "b", "c"].iter().map(|n| p.add_binary(*n)).collect();
        p.add_constraint(
            "cap",
            vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)],
            S::Le,
            4.5,
        );
        for (j, c) in v.iter().zip([5.0, 4.0, 3.0]) {
            p.set_objective_term(*j, c);
        }
        let s = branch_and_bound(&p, &SolveOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 8.0).abs() < 1e-9);
        assert!(s.stats.nodes > 1);
    }

    #[test]
    fn infeasible_integer_problem() {
        let mut p = MilpProblem::new("t", ObjectiveSense::Minimize);
        let a = p.add_binary("a");
        p.add_constraint("half", vec![(a, 2.0)], S::Eq, 1.0);
        assert_eq!(
            branch_and_bound(&p, &SolveOptions::default()).status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn node_limit_keeps_incumbent() {
        let mut p = MilpProblem::new("t", ObjectiveSense::Maximize);
        let v: Vec<_> = (0..12).map(|i| p.add_binary(format!("v{i}"))).collect();
        let terms = v
            .iter()
            .enumerate()
            .map(|(i, &j)| (j, 3.0 + i as f64 * 0.37))
            .collect();
        p.add_constraint("cap", terms, S::Le, 17.3);
        for (i, &j) in v.iter().enumerate() {
            p.set_objective_term(j, 1.0 + (i % 5) as f64);
        }
        let options = SolveOptions {
            node_limit: Some(2),
            ..SolveOptions::default()
        };
        let s = branch_and_bound(&p, &options);
        assert_eq!(s.status, SolveStatus::LimitHit);
        assert!(s.values.is_empty() || p.max_violation(&s.values).row <= 1e-9);
    }
}
