//! Mixed-integer linear programs and the backends that solve them.
//!
//! A [`MilpProblem`] is solver-agnostic. Backends implement [`MilpBackend`]
//! and are looked up by name in a [`BackendRegistry`]. The built-in
//! `reference` backend is a best-bound branch-and-bound over a
//! bounded-variable primal simplex; with the `highs` feature a HiGHS backend
//! is registered as well.

mod bnb;
#[cfg(feature = "highs")]
mod highs_backend;
mod lp_format;
mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::ReferenceBackend;
#[cfg(feature = "highs")]
pub use highs_backend::HighsBackend;
pub use lp_format::write_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("variable `{name}` has non-finite or inverted bounds [{lower}, {upper}]")]
    Bounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("binary variable `{0}` has bounds outside [0, 1]")]
    BinaryBounds(String),
    #[error("{location} references variable index {index}, only {count} declared")]
    UnknownVariable {
        location: String,
        index: usize,
        count: usize,
    },
    #[error("{0} has a non-finite coefficient or right-hand side")]
    NonFinite(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
}

impl MilpProblem {
    pub fn new(name: impl Into<String>, sense: ObjectiveSense) -> Self {
        MilpProblem {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective {
                sense,
                terms: Vec::new(),
                constant: 0.0,
            },
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.variables.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.add_variable(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_variable(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: ConstraintSense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective_term(&mut self, var: usize, coef: f64) {
        self.objective.terms.push((var, coef));
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let count = self.variables.len();
        let mut names = std::collections::HashSet::with_capacity(count);
        for v in &self.variables {
            if !(v.lower.is_finite() && v.upper.is_finite() && v.lower <= v.upper) {
                return Err(ProblemError::Bounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ProblemError::BinaryBounds(v.name.clone()));
            }
            if !names.insert(v.name.as_str()) {
                return Err(ProblemError::DuplicateName(v.name.clone()));
            }
        }
        let check_terms = |location: &str, terms: &[(usize, f64)]| -> Result<(), ProblemError> {
            for &(index, coef) in terms {
                if index >= count {
                    return Err(ProblemError::UnknownVariable {
                        location: location.to_string(),
                        index,
                        count,
                    });
                }
                if !coef.is_finite() {
                    return Err(ProblemError::NonFinite(location.to_string()));
                }
            }
            Ok(())
        };
        for c in &self.constraints {
            let location = format!("constraint `{}`", c.name);
            check_terms(&location, &c.terms)?;
            if !c.rhs.is_finite() {
                return Err(ProblemError::NonFinite(location));
            }
        }
        check_terms("objective", &self.objective.terms)?;
        if !self.objective.constant.is_finite() {
            return Err(ProblemError::NonFinite("objective".into()));
        }
        Ok(())
    }

    /// Objective value of `values`, including the constant.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.constant
            + self
                .objective
                .terms
                .iter()
                .map(|&(j, c)| c * values[j])
                .sum::<f64>()
    }

    /// Largest violation of any bound, row or integrality requirement.
    pub fn max_violation(&self, values: &[f64]) -> Violations {
        let mut out = Violations::default();
        for (v, &x) in self.variables.iter().zip(values) {
            out.bound = out.bound.max(v.lower - x).max(x - v.upper);
            if v.kind == VarKind::Binary {
                out.integrality = out.integrality.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * values[j]).sum();
            let v = match c.sense {
                ConstraintSense::Le => lhs - c.rhs,
                ConstraintSense::Ge => c.rhs - lhs,
                ConstraintSense::Eq => (lhs - c.rhs).abs(),
            };
            out.row = out.row.max(v);
        }
        out
    }

    /// Copy with every binary relaxed to a continuous variable on the same bounds.
    pub fn relaxed(&self) -> MilpProblem {
        let mut p = self.clone();
        for v in &mut p.variables {
            v.kind = VarKind::Continuous;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Violations {
    pub bound: f64,
    pub row: f64,
    pub integrality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub relative_gap: f64,
    /// Search also stops once incumbent and bound are this close in absolute terms.
    pub absolute_gap: f64,
    pub absolute_feasibility_tol: f64,
    pub integrality_tol: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            relative_gap: 1e-6,
            absolute_gap: 1e-9,
            absolute_feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            time_limit_s: None,
            node_limit: None,
        }
    }
}

impl SolveOptions {
    /// Options for runs whose objectives are compared at 1e-6 or tighter.
    pub fn tight() -> Self {
        SolveOptions {
            relative_gap: 1e-9,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
    LimitHit,
    NumericalError { diagnostic: String },
}

impl SolveStatus {
    pub fn has_solution(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible { .. } => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::LimitHit => "limit_hit",
            SolveStatus::NumericalError { .. } => "numerical_error",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Feasible { gap } => write!(f, "feasible(gap={gap})"),
            SolveStatus::NumericalError { diagnostic } => {
                write!(f, "numerical_error({diagnostic})")
            }
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub backend: String,
    pub nodes: u64,
    pub lp_solves: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective in the problem's own sense, constant included. NaN when no
    /// values are available.
    pub objective: f64,
    /// One value per variable, in declaration order. Empty when the solve
    /// produced no point; a `LimitHit` solution carries its incumbent here.
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

impl MilpSolution {
    pub fn without_values(status: SolveStatus, stats: SolveStats) -> Self {
        MilpSolution {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            stats,
        }
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, problem: &MilpProblem, name: &str) -> Option<f64> {
        problem
            .var_index(name)
            .and_then(|i| self.values.get(i).copied())
    }

    pub fn named_values(&self, problem: &MilpProblem) -> BTreeMap<String, f64> {
        problem
            .variables
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }
}

/// A MILP solver. Implementations must be deterministic for identical
/// inputs and options, and single-threaded per call.
pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> MilpSolution;
}

/// Solves the LP relaxation with the reference simplex.
pub fn solve_lp_relaxation(problem: &MilpProblem) -> MilpSolution {
    ReferenceBackend.solve(&problem.relaxed(), &SolveOptions::default())
}

/// Solves with the reference branch-and-bound.
pub fn solve(problem: &MilpProblem, options: &SolveOptions) -> MilpSolution {
    ReferenceBackend.solve(problem, options)
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown solver backend `{name}` (available: {available})")]
pub struct UnknownBackend {
    pub name: String,
    pub available: String,
}

/// Named backends. `with_defaults` registers `reference` and, when compiled
/// in, `highs`.
#[derive(Clone, Default)]
pub struct BackendRegistry {
    backends: HashMap<String, Arc<dyn MilpBackend>>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("reference", Arc::new(ReferenceBackend));
        #[cfg(feature = "highs")]
        r.register("highs", Arc::new(HighsBackend));
        r
    }

    /// Backend used when none is requested: `highs` if compiled in.
    pub fn default_name() -> &'static str {
        if cfg!(feature = "highs") {
            "highs"
        } else {
            "reference"
        }
    }

    pub fn register(&mut self, name: impl Into<String>, backend: Arc<dyn MilpBackend>) {
        self.backends.insert(name.into(), backend);
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<_> = self.backends.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MilpBackend>, UnknownBackend> {
        self.backends
            .get(name)
            .cloned()
            .ok_or_else(|| UnknownBackend {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    /// Solves with the named backend and records that name in the stats.
    pub fn solve_with(
        &self,
        name: &str,
        problem: &MilpProblem,
        options: &SolveOptions,
    ) -> Result<MilpSolution, UnknownBackend> {
        let backend = self.get(name)?;
        let mut solution = backend.solve(problem, options);
        solution.stats.backend = name.to_string();
        Ok(solution)
    }
}

impl fmt::Debug for BackendRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendRegistry")
            .field("backends", &self.names())
            .finish()
    }
}
