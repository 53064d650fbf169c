//! Bounded-variable primal simplex.
//!
//! Rows are written as `A x - r = 0` with one logical variable `r_i` per
//! row that carries the row's bounds, so every variable is boxed and the
//! all-logical basis is always available. Phase 1 minimizes the sum of
//! bound infeasibilities of basic variables; phase 2 uses Dantzig pricing
//! with a Harris two-pass ratio test and falls back to Bland's rule after a
//! run of degenerate pivots. The basis inverse is kept dense and refactored
//! periodically from the structural part of the basis.

#![allow(clippy::needless_range_loop)]

use super::{ConstraintSense, MilpProblem, ObjectiveSense};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const REFACTOR_EVERY: usize = 100;

fn tol(bound: f64) -> f64 {
    PRIMAL_TOL * (1.0 + bound.abs())
}

/// Column-oriented LP `min c·x` s.t. `row_lower <= A x <= row_upper`,
/// `lower <= x <= upper`.
#[derive(Debug, Clone)]
pub(crate) struct LpModel {
    pub m: usize,
    pub n: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    /// Bounds of the `n` structurals followed by the `m` logicals.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// +1 for minimization problems, -1 for maximization.
    pub sign: f64,
}

impl LpModel {
    pub fn from_problem(p: &MilpProblem) -> LpModel {
        let n = p.variables.len();
        let m = p.constraints.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in p.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                match cols[j].last_mut() {
                    Some((row, v)) if *row == i => *v += a,
                    _ => cols[j].push((i, a)),
                }
            }
        }
        for col in &mut cols {
            col.retain(|&(_, a)| a != 0.0);
        }
        let sign = match p.objective.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n];
        for &(j, c) in &p.objective.terms {
            cost[j] += sign * c;
        }
        let mut lower: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = p.variables.iter().map(|v| v.upper).collect();
        for c in &p.constraints {
            let (lo, up) = match c.sense {
                ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
                ConstraintSense::Ge => (c.rhs, f64::INFINITY),
                ConstraintSense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(up);
        }
        LpModel {
            m,
            n,
            cols,
            cost,
            lower,
            upper,
            sign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// A basis that can seed a later solve on the same model.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Basis {
    pub basic: Vec<usize>,
    pub state: Vec<VarState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Singular,
}

pub(crate) struct Simplex<'a> {
    model: &'a LpModel,
    m: usize,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    state: Vec<VarState>,
    /// Column-major dense B⁻¹: entry (position p, row i) at `i * m + p`.
    binv: Vec<f64>,
    since_refactor: usize,
    pub iterations: u64,
}

impl<'a> Simplex<'a> {
    pub fn new(model: &'a LpModel) -> Self {
        let (m, n) = (model.m, model.n);
        let mut s = Simplex {
            model,
            m,
            n,
            lower: model.lower.clone(),
            upper: model.upper.clone(),
            x: vec![0.0; n + m],
            basic: Vec::new(),
            state: Vec::new(),
            binv: vec![0.0; m * m],
            since_refactor: 0,
            iterations: 0,
        };
        s.set_cold_basis();
        s
    }

    /// All logicals basic, structurals at their lower bound.
    pub fn set_cold_basis(&mut self) {
        self.basic = (self.n..self.n + self.m).collect();
        self.state = vec![VarState::AtLower; self.n];
        self.state
            .extend(std::iter::repeat_n(VarState::Basic, self.m));
    }

    pub fn set_basis(&mut self, basis: &Basis) {
        self.basic.clone_from(&basis.basic);
        self.state.clone_from(&basis.state);
    }

    pub fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            state: self.state.clone(),
        }
    }

    pub fn set_structural_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn reset_structural_bounds(&mut self) {
        self.lower[..self.n].copy_from_slice(&self.model.lower[..self.n]);
        self.upper[..self.n].copy_from_slice(&self.model.upper[..self.n]);
    }

    /// Structural values of the last solve.
    pub fn structural_values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.x[j].clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    /// `c·x` in the model's minimization sense.
    pub fn objective(&self) -> f64 {
        self.model
            .cost
            .iter()
            .zip(&self.x)
            .map(|(c, x)| c * x)
            .sum()
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            ColumnIter::Structural(self.model.cols[j].iter())
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    fn place_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            match self.state[j] {
                VarState::Basic => {}
                VarState::AtLower | VarState::AtUpper => {
                    let (lo, up) = (self.lower[j], self.upper[j]);
                    let at_upper = match self.state[j] {
                        VarState::AtUpper => up.is_finite() || !lo.is_finite(),
                        _ => !lo.is_finite() && up.is_finite(),
                    };
                    self.state[j] = if at_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[j] = if at_upper { up } else { lo };
                }
            }
        }
    }

    /// Rebuilds B⁻¹ from scratch. Returns false when the basis is singular.
    fn refactor(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        self.since_refactor = 0;
        let mut logical_pos = vec![usize::MAX; m];
        let mut structural_pos = Vec::new();
        for (p, &j) in self.basic.iter().enumerate() {
            if j >= n {
                logical_pos[j - n] = p;
            } else {
                structural_pos.push(p);
            }
        }
        let rows: Vec<usize> = (0..m).filter(|&i| logical_pos[i] == usize::MAX).collect();
        let k = rows.len();
        if k != structural_pos.len() {
            return false;
        }
        let mut row_slot = vec![usize::MAX; m];
        for (a, &i) in rows.iter().enumerate() {
            row_slot[i] = a;
        }

        // M[a][b] = A[rows[a], var(structural_pos[b])], then M⁻¹ in place.
        let mut mat = vec![0.0; k * k];
        for (b, &p) in structural_pos.iter().enumerate() {
            for &(i, v) in &self.model.cols[self.basic[p]] {
                if row_slot[i] != usize::MAX {
                    mat[row_slot[i] * k + b] = v;
                }
            }
        }
        let Some(minv) = crate::linalg::invert(&mut mat, k) else {
            return false;
        };

        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for (b, &p) in structural_pos.iter().enumerate() {
            for (a, &i) in rows.iter().enumerate() {
                self.binv[i * m + p] = minv[b * k + a];
            }
        }
        for i in 0..m {
            if logical_pos[i] != usize::MAX {
                self.binv[i * m + logical_pos[i]] = -1.0;
            }
        }
        for (b, &p) in structural_pos.iter().enumerate() {
            for &(j, v) in &self.model.cols[self.basic[p]] {
                let q = logical_pos[j];
                if q == usize::MAX {
                    continue;
                }
                for (a, &i) in rows.iter().enumerate() {
                    self.binv[i * m + q] += v * minv[b * k + a];
                }
            }
        }
        true
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.state[j] == VarState::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (i, a) in self.column(j) {
                rhs[i] -= a * xj;
            }
        }
        let mut xb = vec![0.0; m];
        for (i, &r) in rhs.iter().enumerate() {
            if r != 0.0 {
                let col = &self.binv[i * m..(i + 1) * m];
                for (p, v) in xb.iter_mut().enumerate() {
                    *v += col[p] * r;
                }
            }
        }
        for (p, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (i, a) in self.column(j) {
            let col = &self.binv[i * m..(i + 1) * m];
            for (p, v) in alpha.iter_mut().enumerate() {
                *v += col[p] * a;
            }
        }
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                let col = &self.binv[i * m..(i + 1) * m];
                col.iter().zip(cb).map(|(b, c)| b * c).sum()
            })
            .collect()
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        for i in 0..m {
            let col = &mut self.binv[i * m..(i + 1) * m];
            let v = col[r] / ar;
            if v != 0.0 {
                for (p, c) in col.iter_mut().enumerate() {
                    *c -= alpha[p] * v;
                }
            }
            col[r] = v;
        }
        self.since_refactor += 1;
    }

    fn infeasibility_sign(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lower[j] - tol(self.lower[j]) {
            -1.0
        } else if x > self.upper[j] + tol(self.upper[j]) {
            1.0
        } else {
            0.0
        }
    }

    /// Runs both phases from the current basis.
    pub fn solve(&mut self, iteration_limit: u64) -> LpStatus {
        self.place_nonbasic();
        if !self.refactor() {
            self.set_cold_basis();
            self.place_nonbasic();
            if !self.refactor() {
                return LpStatus::Singular;
            }
        }
        self.compute_basic_values();

        let (m, n) = (self.m, self.n);
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut fresh = true;
        let mut cb = vec![0.0; m];
        let start = self.iterations;
        loop {
            if self.iterations - start >= iteration_limit {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return LpStatus::Singular;
                }
                self.compute_basic_values();
                fresh = true;
            }

            let mut phase_one = false;
            for (p, &j) in self.basic.iter().enumerate() {
                cb[p] = self.infeasibility_sign(j);
                phase_one |= cb[p] != 0.0;
            }
            if !phase_one {
                for (p, &j) in self.basic.iter().enumerate() {
                    cb[p] = if j < n { self.model.cost[j] } else { 0.0 };
                }
            }
            let y = self.btran(&cb);

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..n + m {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let c = if phase_one || j >= n {
                    0.0
                } else {
                    self.model.cost[j]
                };
                let d = c - self.column(j).map(|(i, a)| y[i] * a).sum::<f64>();
                let dir = if d < -DUAL_TOL && st == VarState::AtLower {
                    1.0
                } else if d > DUAL_TOL && st == VarState::AtUpper {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| d.abs() > best.abs()) {
                    entering = Some((j, dir, d));
                }
            }

            let Some((q, dir, _)) = entering else {
                if !fresh {
                    if !self.refactor() {
                        return LpStatus::Singular;
                    }
                    self.compute_basic_values();
                    fresh = true;
                    continue;
                }
                return if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };

            let alpha = self.ftran(q);
            let flip_range = self.upper[q] - self.lower[q];

            // Ratio test: each basic variable moves at rate -dir·alpha_p and
            // blocks at the first bound it reaches in that direction.
            let target = |p: usize| -> Option<(f64, f64, bool)> {
                let a = alpha[p];
                if a.abs() <= PIVOT_TOL {
                    return None;
                }
                let j = self.basic[p];
                let (x, lo, up) = (self.x[j], self.lower[j], self.upper[j]);
                let rate = -dir * a;
                if rate < 0.0 {
                    if x > up + tol(up) {
                        Some((up, rate, true))
                    } else if lo.is_finite() && x >= lo - tol(lo) {
                        Some((lo, rate, false))
                    } else {
                        None
                    }
                } else if x < lo - tol(lo) {
                    Some((lo, rate, false))
                } else if up.is_finite() && x <= up + tol(up) {
                    Some((up, rate, true))
                } else {
                    None
                }
            };

            let mut leave: Option<(usize, f64, bool)> = None;
            let mut step = f64::INFINITY;
            if bland {
                for p in 0..m {
                    if let Some((b, rate, to_upper)) = target(p) {
                        let t = ((b - self.x[self.basic[p]]) / rate).max(0.0);
                        let better = match leave {
                            None => true,
                            Some((lp, _, _)) => {
                                t < step - 1e-12
                                    || (t <= step + 1e-12 && self.basic[p] < self.basic[lp])
                            }
                        };
                        if better {
                            step = t;
                            leave = Some((p, b, to_upper));
                        }
                    }
                }
            } else {
                let mut relaxed = f64::INFINITY;
                for p in 0..m {
                    if let Some((b, rate, _)) = target(p) {
                        let x = self.x[self.basic[p]];
                        let t = if rate < 0.0 {
                            (x - b + tol(b)) / -rate
                        } else {
                            (b + tol(b) - x) / rate
                        };
                        relaxed = relaxed.min(t.max(0.0));
                    }
                }
                let mut best_alpha = 0.0;
                for p in 0..m {
                    if let Some((b, rate, to_upper)) = target(p) {
                        let t = ((b - self.x[self.basic[p]]) / rate).max(0.0);
                        if t <= relaxed && alpha[p].abs() > best_alpha {
                            best_alpha = alpha[p].abs();
                            step = t;
                            leave = Some((p, b, to_upper));
                        }
                    }
                }
                if flip_range <= relaxed {
                    leave = None;
                    step = flip_range;
                }
            }
            if leave.is_some() && flip_range < step {
                leave = None;
                step = flip_range;
            }
            if !step.is_finite() {
                return LpStatus::Unbounded;
            }

            self.iterations += 1;
            fresh = false;
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }

            if step > 0.0 {
                for p in 0..m {
                    let j = self.basic[p];
                    self.x[j] -= dir * step * alpha[p];
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some((r, b, to_upper)) => {
                    let out = self.basic[r];
                    self.x[q] += dir * step;
                    self.x[out] = b;
                    self.state[out] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.state[q] = VarState::Basic;
                    self.basic[r] = q;
                    self.pivot_update(r, &alpha);
                }
            }
        }
    }
}

enum ColumnIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Logical(row) => row.take().map(|i| (i, -1.0)),
        }
    }
}
