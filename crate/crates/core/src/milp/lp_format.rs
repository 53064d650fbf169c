//! CPLEX-LP style text dump of a problem. Numbers use the shortest
//! round-trip representation, so the output is byte-stable.

use std::fmt::Write;

use super::{ConstraintSense, MilpProblem, ObjectiveSense, VarKind};

fn write_terms(out: &mut String, problem: &MilpProblem, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(j, c)) in terms.iter().enumerate() {
        let name = &problem.variables[j].name;
        if c < 0.0 {
            let _ = write!(out, " - {} {name}", -c);
        } else if k == 0 {
            let _ = write!(out, " {c} {name}");
        } else {
            let _ = write!(out, " + {c} {name}");
        }
    }
}

pub fn write_lp(problem: &MilpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", problem.name);
    if problem.objective.constant != 0.0 {
        let _ = writeln!(out, "\\ Objective constant: {}", problem.objective.constant);
    }
    out.push_str(match problem.objective.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        ObjectiveSense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, problem, &problem.objective.terms);
    out.push_str("\nSubject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, problem, &c.terms);
        let op = match c.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Ge => ">=",
            ConstraintSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &problem.variables {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, v.lower);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
    }
    let binaries: Vec<&str> = problem
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}
