//! Primal simplex over bounded variables with a dense basis inverse.
//!
//! Columns are the structural variables followed by one slack per row; a row
//! `a.x (rel) b` is held as `a.x + s = b` with the slack bounded by the
//! relation. Feasibility is restored by a composite phase 1 that minimizes
//! the total bound violation of the basic variables, so warm starts after
//! row additions or right-hand-side changes need no artificial columns.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{Constraint, LpModel, Objective, Relation, Sense, SolveOutcome, SolveStatus};
use crate::{Error, Result};

/// Bound feasibility tolerance; also the infeasibility certification level.
const FEAS_TOL: f64 = 1e-9;
/// Constraint residual tolerance for the final verification pass.
const ROW_TOL: f64 = 1e-8;
/// Reduced-cost threshold below which a column is not worth entering.
const DUAL_TOL: f64 = 1e-9;
/// Smallest pivot-column entry considered for blocking and pivoting.
const PIV_TOL: f64 = 1e-9;
/// Step length under which a pivot counts as degenerate.
const DEGEN_EPS: f64 = 1e-12;

const UNSET: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic with both bounds infinite, parked at zero.
    Free,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    rhs: f64,
}

enum PhaseEnd {
    Feasible,
    Infeasible,
    Optimal,
    Unbounded,
}

/// A solver session that keeps its basis across objective swaps, appended
/// rows, and right-hand-side changes.
pub struct Simplex {
    n_struct: usize,
    /// CSC of the structural columns: per column, (row, coefficient).
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    /// Basic column of each row.
    basis: Vec<usize>,
    /// Row of each basic column, `UNSET` for nonbasic.
    basis_pos: Vec<usize>,
    /// Dense inverse of the basis matrix, row-major.
    binv: Vec<Vec<f64>>,
    /// Internal minimization costs per column.
    cost: Vec<f64>,
    /// Original objective for value reporting.
    objective: Objective,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
}

impl Simplex {
    pub fn new(model: &LpModel) -> Result<Self> {
        model.validate()?;
        let n_struct = model.variables.len();
        let mut solver = Self {
            n_struct,
            cols: vec![Vec::new(); n_struct],
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            x: Vec::new(),
            status: Vec::new(),
            basis: Vec::new(),
            basis_pos: Vec::new(),
            binv: Vec::new(),
            cost: Vec::new(),
            objective: Objective { terms: Vec::new(), sense: Sense::Minimize },
            iterations: 0,
            degenerate_run: 0,
            bland: false,
        };
        for v in &model.variables {
            solver.lower.push(v.lower);
            solver.upper.push(v.upper);
            let (status, x) = nonbasic_start(v.lower, v.upper);
            solver.status.push(status);
            solver.x.push(x);
            solver.basis_pos.push(UNSET);
            solver.cost.push(0.0);
        }
        for c in &model.constraints {
            solver.push_row(c)?;
        }
        solver.set_objective(&model.objective)?;
        Ok(solver)
    }

    /// Number of rows currently in the model.
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Replaces the objective; the factorized basis stays valid.
    pub fn set_objective(&mut self, objective: &Objective) -> Result<()> {
        for slot in self.cost.iter_mut().take(self.n_struct) {
            *slot = 0.0;
        }
        let sign = match objective.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for &(idx, coef) in &objective.terms {
            if idx >= self.n_struct {
                return Err(Error::Model("objective references unknown variable".to_string()));
            }
            if !coef.is_finite() {
                return Err(Error::Model("objective has a non-finite coefficient".to_string()));
            }
            self.cost[idx] += sign * coef;
        }
        self.objective = objective.clone();
        Ok(())
    }

    /// Appends one row; the enlarged basis keeps the previous solution and
    /// simply makes the new slack basic.
    pub fn add_constraint(&mut self, constraint: &Constraint) -> Result<()> {
        for &(idx, coef) in &constraint.terms {
            if idx >= self.n_struct {
                return Err(Error::Model("constraint references unknown variable".to_string()));
            }
            if !coef.is_finite() {
                return Err(Error::Model("constraint has a non-finite coefficient".to_string()));
            }
        }
        if !constraint.rhs.is_finite() {
            return Err(Error::Model("constraint has a non-finite right-hand side".to_string()));
        }
        self.push_row(constraint)
    }

    /// Changes the right-hand side of one row and refreshes the basic values.
    pub fn set_rhs(&mut self, row: usize, rhs: f64) -> Result<()> {
        if row >= self.rows.len() {
            return Err(Error::Model("row index out of range".to_string()));
        }
        if !rhs.is_finite() {
            return Err(Error::Model("non-finite right-hand side".to_string()));
        }
        self.rows[row].rhs = rhs;
        self.recompute_basics();
        Ok(())
    }

    /// Runs phase 1 (when needed) and phase 2 from the current basis.
    pub fn solve(&mut self) -> Result<SolveOutcome> {
        self.iterations = 0;
        self.degenerate_run = 0;
        self.bland = false;
        for attempt in 0..2 {
            if self.infeasibility() > FEAS_TOL {
                match self.run_phase(true)? {
                    PhaseEnd::Infeasible => {
                        return Ok(SolveOutcome {
                            status: SolveStatus::Infeasible,
                            values: Vec::new(),
                            objective_value: f64::NAN,
                        });
                    }
                    PhaseEnd::Feasible => {}
                    _ => return Err(Error::Numerical("phase 1 ended abnormally".to_string())),
                }
            }
            match self.run_phase(false)? {
                PhaseEnd::Unbounded => {
                    return Ok(SolveOutcome {
                        status: SolveStatus::Unbounded,
                        values: Vec::new(),
                        objective_value: f64::NAN,
                    });
                }
                PhaseEnd::Optimal => {}
                _ => return Err(Error::Numerical("phase 2 ended abnormally".to_string())),
            }
            if self.verify() {
                return Ok(self.extract());
            }
            if attempt == 0 {
                // accumulated update error: rebuild the inverse and resolve
                self.refactorize()?;
            }
        }
        Err(Error::Numerical("solution failed verification after refactorization".to_string()))
    }

    fn push_row(&mut self, constraint: &Constraint) -> Result<()> {
        let r = self.rows.len();
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        for &(idx, coef) in &constraint.terms {
            *terms.entry(idx).or_insert(0.0) += coef;
        }
        let mut activity = 0.0;
        for (&idx, &coef) in &terms {
            self.cols[idx].push((r, coef));
            activity += coef * self.x[idx];
        }
        self.rows.push(Row { rhs: constraint.rhs });

        let (lo, hi) = match constraint.relation {
            Relation::Le => (0.0, f64::INFINITY),
            Relation::Ge => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (0.0, 0.0),
        };
        let slack = self.n_struct + r;
        debug_assert_eq!(slack, self.lower.len());
        self.lower.push(lo);
        self.upper.push(hi);
        self.x.push(constraint.rhs - activity);
        self.status.push(VarStatus::Basic);
        self.cost.push(0.0);
        self.basis_pos.push(r);
        self.basis.push(slack);

        // grow the inverse: B' = [[B, 0], [v^T, 1]] inverts to
        // [[Binv, 0], [-v^T Binv, 1]] where v holds the new row's
        // coefficients on the currently basic columns
        let m = r;
        let mut new_row = vec![0.0; m + 1];
        for (&idx, &coef) in &terms {
            let pos = self.basis_pos[idx];
            if pos != UNSET && pos < m {
                let src = core::mem::take(&mut self.binv[pos]);
                for (slot, s) in new_row[..m].iter_mut().zip(&src) {
                    *slot -= coef * s;
                }
                self.binv[pos] = src;
            }
        }
        new_row[m] = 1.0;
        for row in self.binv.iter_mut() {
            row.push(0.0);
        }
        self.binv.push(new_row);
        Ok(())
    }

    fn infeasibility(&self) -> f64 {
        let mut f = 0.0;
        for &col in &self.basis {
            let v = self.x[col];
            if v < self.lower[col] {
                f += self.lower[col] - v;
            } else if v > self.upper[col] {
                f += v - self.upper[col];
            }
        }
        f
    }

    /// One simplex phase. With `phase1` the objective is the total bound
    /// violation of the basic variables, recomputed every iteration.
    fn run_phase(&mut self, phase1: bool) -> Result<PhaseEnd> {
        let m = self.rows.len();
        let n_total = self.lower.len();
        let iteration_cap = 50 * (m + n_total).max(20);
        let bland_after = 3 * (m + n_total).max(20);

        let mut y = vec![0.0; m];
        loop {
            if self.iterations > iteration_cap {
                return Err(Error::Numerical("simplex iteration cap exceeded".to_string()));
            }
            self.iterations += 1;
            if self.degenerate_run > bland_after {
                self.bland = true;
            }

            // duals of the active objective
            let mut basic_costs: Vec<(usize, f64)> = Vec::new();
            if phase1 {
                if self.infeasibility() <= FEAS_TOL {
                    return Ok(PhaseEnd::Feasible);
                }
                for (r, &col) in self.basis.iter().enumerate() {
                    if self.x[col] < self.lower[col] - FEAS_TOL {
                        basic_costs.push((r, -1.0));
                    } else if self.x[col] > self.upper[col] + FEAS_TOL {
                        basic_costs.push((r, 1.0));
                    }
                }
            } else {
                for (r, &col) in self.basis.iter().enumerate() {
                    if self.cost[col] != 0.0 {
                        basic_costs.push((r, self.cost[col]));
                    }
                }
            }
            y.fill(0.0);
            for &(r, c) in &basic_costs {
                let row = &self.binv[r];
                for (slot, b) in y.iter_mut().zip(row) {
                    *slot += c * b;
                }
            }

            // pricing
            let mut best: Option<(usize, i8, f64)> = None; // (col, dir, |d|)
            for j in 0..n_total {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = cj - self.dot_column(j, &y);
                let candidate = match st {
                    VarStatus::AtLower if d < -DUAL_TOL => Some((1i8, -d)),
                    VarStatus::AtUpper if d > DUAL_TOL => Some((-1i8, d)),
                    VarStatus::Free if d.abs() > DUAL_TOL => {
                        Some((if d < 0.0 { 1 } else { -1 }, d.abs()))
                    }
                    _ => None,
                };
                if let Some((dir, score)) = candidate {
                    if self.bland {
                        best = Some((j, dir, score));
                        break;
                    }
                    if best.as_ref().is_none_or(|&(_, _, s)| score > s) {
                        best = Some((j, dir, score));
                    }
                }
            }
            let Some((q, dir, _)) = best else {
                return Ok(if phase1 { PhaseEnd::Infeasible } else { PhaseEnd::Optimal });
            };
            let dir = dir as f64;

            // pivot column w = Binv a_q
            let w = self.pivot_column(q);

            // ratio test: how far can x_q move along dir
            let span = self.upper[q] - self.lower[q];
            let mut best_t = f64::INFINITY;
            let mut leave: Option<(usize, VarStatus, f64)> = None; // (row, bound hit, |w|)
            for (r, &wi) in w.iter().enumerate() {
                let g = -dir * wi;
                if g.abs() <= PIV_TOL {
                    continue;
                }
                let col = self.basis[r];
                let v = self.x[col];
                let lo = self.lower[col];
                let hi = self.upper[col];
                let candidate = if phase1 && v < lo - FEAS_TOL {
                    // infeasible below: blocks where it regains its lower bound
                    (g > 0.0).then(|| ((lo - v) / g, VarStatus::AtLower))
                } else if phase1 && v > hi + FEAS_TOL {
                    (g < 0.0).then(|| ((v - hi) / -g, VarStatus::AtUpper))
                } else if g > 0.0 {
                    hi.is_finite().then(|| ((hi - v) / g, VarStatus::AtUpper))
                } else {
                    lo.is_finite().then(|| ((v - lo) / -g, VarStatus::AtLower))
                };
                if let Some((t, hit)) = candidate {
                    let t = t.max(0.0);
                    let better = match leave {
                        None => t < best_t,
                        Some((lr, _, lw)) => {
                            if t < best_t - DEGEN_EPS {
                                true
                            } else if t > best_t + DEGEN_EPS {
                                false
                            } else if self.bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                wi.abs() > lw
                            }
                        }
                    };
                    if better {
                        best_t = t;
                        leave = Some((r, hit, wi.abs()));
                    }
                }
            }

            if span < best_t {
                // bound flip: the entering variable crosses to its other bound
                self.apply_step(q, dir, span, &w);
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                self.status[q] =
                    if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.note_step(span);
                continue;
            }
            let Some((r, hit, _)) = leave else {
                if phase1 {
                    // the violation objective is bounded below, so an
                    // unblocked ray cannot exist with exact arithmetic
                    return Err(Error::Numerical("phase 1 produced an unbounded ray".to_string()));
                }
                return Ok(PhaseEnd::Unbounded);
            };

            self.apply_step(q, dir, best_t, &w);
            let leaving = self.basis[r];
            self.x[leaving] = match hit {
                VarStatus::AtLower => self.lower[leaving],
                VarStatus::AtUpper => self.upper[leaving],
                _ => unreachable!(),
            };
            self.status[leaving] = hit;
            self.basis_pos[leaving] = UNSET;
            self.basis[r] = q;
            self.basis_pos[q] = r;
            self.status[q] = VarStatus::Basic;
            self.update_inverse(r, &w)?;
            self.note_step(best_t);
        }
    }

    fn note_step(&mut self, t: f64) {
        if t <= DEGEN_EPS {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
    }

    /// Moves the entering variable by `t` along `dir` and drags the basics.
    fn apply_step(&mut self, q: usize, dir: f64, t: f64, w: &[f64]) {
        if t == 0.0 {
            return;
        }
        self.x[q] += dir * t;
        for (r, &wi) in w.iter().enumerate() {
            if wi != 0.0 {
                let col = self.basis[r];
                self.x[col] -= dir * t * wi;
            }
        }
    }

    /// Reduced-cost dot `y . a_j` for any column.
    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n_struct {
            self.cols[j].iter().map(|&(r, v)| y[r] * v).sum()
        } else {
            y[j - self.n_struct]
        }
    }

    /// `Binv a_q` computed row-wise against the sparse column.
    fn pivot_column(&self, q: usize) -> Vec<f64> {
        let m = self.rows.len();
        let mut w = vec![0.0; m];
        if q < self.n_struct {
            let col = &self.cols[q];
            for (wi, row) in w.iter_mut().zip(&self.binv) {
                let mut acc = 0.0;
                for &(r, v) in col {
                    acc += row[r] * v;
                }
                *wi = acc;
            }
        } else {
            let r = q - self.n_struct;
            for (wi, row) in w.iter_mut().zip(&self.binv) {
                *wi = row[r];
            }
        }
        w
    }

    /// Product-form update of the dense inverse after `q` replaces row `r`.
    fn update_inverse(&mut self, r: usize, w: &[f64]) -> Result<()> {
        let pivot = w[r];
        if pivot.abs() < PIV_TOL {
            return Err(Error::Numerical("vanishing pivot element".to_string()));
        }
        let inv = 1.0 / pivot;
        let pivot_row = core::mem::take(&mut self.binv[r]);
        let mut scaled = pivot_row;
        for v in scaled.iter_mut() {
            *v *= inv;
        }
        for (i, row) in self.binv.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = w[i];
            if f != 0.0 {
                for (slot, s) in row.iter_mut().zip(&scaled) {
                    *slot -= f * s;
                }
            }
        }
        self.binv[r] = scaled;
        Ok(())
    }

    /// Recomputes the basic values from the bounds-pinned nonbasic ones.
    fn recompute_basics(&mut self) {
        let m = self.rows.len();
        let mut rhs_eff: Vec<f64> = self.rows.iter().map(|r| r.rhs).collect();
        for j in 0..self.lower.len() {
            if self.status[j] == VarStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            if j < self.n_struct {
                for &(r, v) in &self.cols[j] {
                    rhs_eff[r] -= v * self.x[j];
                }
            } else {
                rhs_eff[j - self.n_struct] -= self.x[j];
            }
        }
        for r in 0..m {
            let mut acc = 0.0;
            for (b, rhs) in self.binv[r].iter().zip(&rhs_eff) {
                acc += b * rhs;
            }
            self.x[self.basis[r]] = acc;
        }
    }

    /// Rebuilds the dense inverse from the basis by Gauss-Jordan elimination.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.rows.len();
        let mut a = vec![vec![0.0; m]; m];
        for (k, &col) in self.basis.iter().enumerate() {
            if col < self.n_struct {
                for &(r, v) in &self.cols[col] {
                    a[r][k] = v;
                }
            } else {
                a[col - self.n_struct][k] = 1.0;
            }
        }
        let mut inv = vec![vec![0.0; m]; m];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for k in 0..m {
            let mut piv = k;
            for i in (k + 1)..m {
                if a[i][k].abs() > a[piv][k].abs() {
                    piv = i;
                }
            }
            if a[piv][k].abs() < 1e-12 {
                return Err(Error::Numerical("singular basis during refactorization".to_string()));
            }
            a.swap(k, piv);
            inv.swap(k, piv);
            let d = a[k][k];
            for v in a[k].iter_mut() {
                *v /= d;
            }
            for v in inv[k].iter_mut() {
                *v /= d;
            }
            for i in 0..m {
                if i != k && a[i][k] != 0.0 {
                    let f = a[i][k];
                    let (ak, ai) = if i < k {
                        let (lo, hi) = a.split_at_mut(k);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = a.split_at_mut(i);
                        (&lo[k], &mut hi[0])
                    };
                    for (slot, s) in ai.iter_mut().zip(ak) {
                        *slot -= f * s;
                    }
                    let (ik, ii) = if i < k {
                        let (lo, hi) = inv.split_at_mut(k);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = inv.split_at_mut(i);
                        (&lo[k], &mut hi[0])
                    };
                    for (slot, s) in ii.iter_mut().zip(ik) {
                        *slot -= f * s;
                    }
                }
            }
        }
        // the permutation applied to rows of [A | I] during elimination
        // leaves inv as the true inverse of the basis matrix
        self.binv = inv;
        self.recompute_basics();
        Ok(())
    }

    /// Optimal points must satisfy rows to 1e-8 and bounds to 1e-9.
    fn verify(&self) -> bool {
        let m = self.rows.len();
        let mut act = vec![0.0; m];
        for j in 0..self.n_struct {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(r, v) in &self.cols[j] {
                    act[r] += v * xj;
                }
            }
        }
        for r in 0..m {
            if (act[r] + self.x[self.n_struct + r] - self.rows[r].rhs).abs() > ROW_TOL {
                return false;
            }
        }
        for j in 0..self.lower.len() {
            if self.x[j] < self.lower[j] - FEAS_TOL || self.x[j] > self.upper[j] + FEAS_TOL {
                return false;
            }
        }
        true
    }

    fn extract(&self) -> SolveOutcome {
        let values: Vec<f64> = self.x[..self.n_struct].to_vec();
        let objective_value: f64 =
            self.objective.terms.iter().map(|&(idx, coef)| coef * values[idx]).sum();
        SolveOutcome { status: SolveStatus::Optimal, values, objective_value }
    }

    /// Current value of a structural variable (meaningful after a solve).
    pub fn value(&self, idx: usize) -> f64 {
        self.x[idx]
    }
}

fn nonbasic_start(lower: f64, upper: f64) -> (VarStatus, f64) {
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => {
            if lower.abs() <= upper.abs() {
                (VarStatus::AtLower, lower)
            } else {
                (VarStatus::AtUpper, upper)
            }
        }
        (true, false) => (VarStatus::AtLower, lower),
        (false, true) => (VarStatus::AtUpper, upper),
        (false, false) => (VarStatus::Free, 0.0),
    }
}
