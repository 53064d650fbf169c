//! Backend delegating to the HiGHS MILP solver, run single-threaded.

use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use super::{
    ConstraintSense, MilpBackend, MilpProblem, MilpSolution, ObjectiveSense, SolveOptions,
    SolveStats, SolveStatus, VarKind,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl MilpBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> MilpSolution {
        let start = Instant::now();
        let mut stats = SolveStats {
            backend: "highs".into(),
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
        if problem.variables.is_empty() {
            stats.wall_time_s = start.elapsed().as_secs_f64();
            return MilpSolution {
                status: SolveStatus::Optimal,
                objective: problem.objective.constant,
                values: Vec::new(),
                stats,
            };
        }

        let mut cost = vec![0.0; problem.variables.len()];
        for &(j, c) in &problem.objective.terms {
            cost[j] += c;
        }
        let mut rp = RowProblem::default();
        let cols: Vec<_> = problem
            .variables
            .iter()
            .zip(&cost)
            .map(|(v, &c)| match v.kind {
                VarKind::Binary => rp.add_integer_column(c, v.lower..=v.upper),
                VarKind::Continuous => rp.add_column(c, v.lower..=v.upper),
            })
            .collect();
        for c in &problem.constraints {
            let terms: Vec<_> = c.terms.iter().map(|&(j, a)| (cols[j], a)).collect();
            match c.sense {
                ConstraintSense::Le => rp.add_row(..=c.rhs, terms),
                ConstraintSense::Ge => rp.add_row(c.rhs.., terms),
                ConstraintSense::Eq => rp.add_row(c.rhs..=c.rhs, terms),
            }
        }

        let sense = match problem.objective.sense {
            ObjectiveSense::Maximize => Sense::Maximise,
            ObjectiveSense::Minimize => Sense::Minimise,
        };
        let mut model = match rp.try_optimise(sense) {
            Ok(m) => m,
            Err(status) => {
                return MilpSolution::without_values(
                    SolveStatus::NumericalError {
                        diagnostic: format!("HiGHS rejected the model: {status:?}"),
                    },
                    stats,
                )
            }
        };
        model.make_quiet();
        model.set_option("threads", 1);
        model.set_option("random_seed", 0);
        model.set_option("mip_rel_gap", options.relative_gap);
        model.set_option("mip_abs_gap", options.absolute_gap);
        model.set_option("mip_feasibility_tolerance", options.integrality_tol);
        model.set_option(
            "primal_feasibility_tolerance",
            (options.absolute_feasibility_tol * 1e-2).max(1e-10),
        );
        if let Some(t) = options.time_limit_s {
            model.set_option("time_limit", t);
        }
        if let Some(n) = options.node_limit {
            model.set_option("mip_max_nodes", i32::try_from(n).unwrap_or(i32::MAX));
        }

        let solved = match model.try_solve() {
            Ok(s) => s,
            Err(status) => {
                stats.wall_time_s = start.elapsed().as_secs_f64();
                return MilpSolution::without_values(
                    SolveStatus::NumericalError {
                        diagnostic: format!("HiGHS run failed: {status:?}"),
                    },
                    stats,
                );
            }
        };
        stats.wall_time_s = start.elapsed().as_secs_f64();
        stats.lp_solves = u64::try_from(solved.simplex_iteration_count()).unwrap_or(0);
        stats.nodes = solved
            .int_info_value(c"mip_node_count")
            .ok()
            .and_then(|n| u64::try_from(n).ok())
            .unwrap_or(0);

        let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                SolveStatus::Unbounded
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit => SolveStatus::LimitHit,
            other => SolveStatus::NumericalError {
                diagnostic: format!("HiGHS status {other:?}"),
            },
        };
        if !(has_point && matches!(status, SolveStatus::Optimal | SolveStatus::LimitHit)) {
            return MilpSolution::without_values(status, stats);
        }
        let values = solved.get_solution().columns().to_vec();
        let objective = problem.objective_value(&values);
        MilpSolution {
            status,
            objective,
            values,
            stats,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve, ConstraintSense as S};

    #[test]
    fn agrees_with_reference_on_small_knapsack() {
        let mut p = MilpProblem::new("t", ObjectiveSense::Maximize);
        let v: Vec<_> = (0..6).map(|i| p.add_binary(format!("b{i}"))).collect();
        let x = p.add_continuous("x", 0.0, 2.5);
        let mut terms: Vec<_> = v
            .iter()
            .enumerate()
            .map(|(i, &j)| (j, 1.0 + i as f64))
            .collect();
        terms.push((x, 1.0));
        p.add_constraint("cap", terms, S::Le, 9.7);
        for (i, &j) in v.iter().enumerate() {
            p.set_objective_term(j, 2.0 + (i * 7 % 5) as f64);
        }
        p.set_objective_term(x, 0.9);
        p.objective.constant = 1.5;
        let h = HighsBackend.solve(&p, &SolveOptions::tight());
        let r = solve(&p, &SolveOptions::tight());
        assert_eq!(h.status, SolveStatus::Optimal);
        assert!(
            (h.objective - r.objective).abs() < 1e-6,
            "{} vs {}",
            h.objective,
            r.objective
        );
    }

    #[test]
    fn infeasible_is_reported() {
        let mut p = MilpProblem::new("t", ObjectiveSense::Minimize);
        let a = p.add_binary("a");
        p.add_constraint("half", vec![(a, 2.0)], S::Eq, 1.0);
        assert_eq!(
            HighsBackend.solve(&p, &SolveOptions::default()).status,
            SolveStatus::Infeasible
        );
    }
}
