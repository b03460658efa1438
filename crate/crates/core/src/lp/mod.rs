//! Dense bounded-variable primal simplex.
//!
//! Solves `min c^T x` subject to `Ax + s = b`, `l <= x <= u`, `s >= 0`, where
//! every row of `A` comes from a normalized `<=` constraint and `s` holds the
//! row slacks. Variables are indexed `0..n` for structurals and `n..n+m` for
//! slacks.
//!
//! Phase 1 minimizes the sum of bound violations of the basic variables and
//! stops each step at the first breakpoint. Pricing is Dantzig's rule until the
//! objective stalls for `n + m` pivots, after which Bland's rule takes over.
//! Every tie is broken towards the lowest variable index, so a solve is a pure
//! function of its inputs.

mod factor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::model::{MipModel, SparseRow};

pub use factor::{Factor, TableauRow};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_INTERVAL: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    FreeNonbasic,
}

/// Simplex basis. `row_basic[r]` is the variable basic in tableau row `r`;
/// indices `>= n` denote the slack of row `index - n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Basis {
    pub var_status: Vec<VarStatus>,
    pub row_status: Vec<VarStatus>,
    pub row_basic: Vec<usize>,
}

impl Basis {
    /// All-slack basis with structurals at a finite bound.
    pub fn slack(lower: &[f64], upper: &[f64], m: usize) -> Basis {
        let var_status = lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| nonbasic_status(VarStatus::AtLower, l, u))
            .collect();
        let n = lower.len();
        Basis {
            var_status,
            row_status: vec![VarStatus::Basic; m],
            row_basic: (n..n + m).collect(),
        }
    }

    pub fn num_basic(&self) -> usize {
        self.var_status
            .iter()
            .chain(&self.row_status)
            .filter(|s| **s == VarStatus::Basic)
            .count()
    }

    pub fn status(&self, var: usize) -> VarStatus {
        let n = self.var_status.len();
        if var < n {
            self.var_status[var]
        } else {
            self.row_status[var - n]
        }
    }
}

fn nonbasic_status(wanted: VarStatus, l: f64, u: f64) -> VarStatus {
    match wanted {
        VarStatus::AtLower if l.is_finite() => VarStatus::AtLower,
        VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
        _ if l.is_finite() => VarStatus::AtLower,
        _ if u.is_finite() => VarStatus::AtUpper,
        _ => VarStatus::FreeNonbasic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// `c^T x` of the final point (without any model offset).
    pub objective: f64,
    pub primal: Vec<f64>,
    pub slack: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

impl LpResult {
    /// Value of variable `var` in the extended (structural + slack) indexing.
    pub fn value(&self, var: usize) -> f64 {
        let n = self.primal.len();
        if var < n {
            self.primal[var]
        } else {
            self.slack[var - n]
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("basis is numerically singular")]
    NumericalFailure,
    #[error("inconsistent bounds on variable {0}")]
    InvalidBounds(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iteration limit must be at least 1")]
    ZeroIterationLimit,
    #[error("LP result is not optimal")]
    NotOptimal,
    #[error("variable {0} is not basic")]
    NotBasic(usize),
}

/// Constraint rows seen by the simplex: the model rows optionally followed by
/// extra rows (cuts). The model itself is never modified.
#[derive(Clone, Debug)]
pub struct LpView<'a> {
    objective: &'a [f64],
    rows: Vec<&'a SparseRow>,
    rhs: Vec<f64>,
}

impl<'a> LpView<'a> {
    pub fn of_model(model: &'a MipModel) -> Self {
        Self {
            objective: model.objective(),
            rows: model.rows().iter().collect(),
            rhs: model.rhs().to_vec(),
        }
    }

    pub fn with_rows(
        model: &'a MipModel,
        extra: impl IntoIterator<Item = (&'a SparseRow, f64)>,
    ) -> Self {
        let mut view = Self::of_model(model);
        for (row, rhs) in extra {
            view.rows.push(row);
            view.rhs.push(rhs);
        }
        view
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        self.objective
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        self.rows[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Dense copy of the constraint matrix, row-major `m x n`.
    pub(crate) fn dense(&self) -> Vec<f64> {
        let n = self.num_vars();
        let mut a = vec![0.0; self.num_rows() * n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                a[i * n + j] = v;
            }
        }
        a
    }
}

/// Solves the LP relaxation of `model` over the bounds held by `domain`.
pub fn solve_lp(
    model: &MipModel,
    domain: &Domain,
    warm: Option<&Basis>,
    iter_limit: usize,
) -> Result<LpResult, LpError> {
    solve_view(
        &LpView::of_model(model),
        domain.lower(),
        domain.upper(),
        warm,
        iter_limit,
    )
}

/// Solves the LP described by `view` under the given variable bounds.
pub fn solve_view(
    view: &LpView<'_>,
    lower: &[f64],
    upper: &[f64],
    warm: Option<&Basis>,
    iter_limit: usize,
) -> Result<LpResult, LpError> {
    let n = view.num_vars();
    if lower.len() != n || upper.len() != n {
        return Err(LpError::DimensionMismatch {
            expected: n,
            got: lower.len().min(upper.len()),
        });
    }
    if iter_limit == 0 {
        return Err(LpError::ZeroIterationLimit);
    }
    if let Some(j) = (0..n).find(|&j| lower[j] > upper[j] || lower[j] == f64::INFINITY || upper[j] == f64::NEG_INFINITY) {
        return Err(LpError::InvalidBounds(j));
    }
    let mut simplex = Simplex::new(view, lower, upper, warm)?;
    let status = simplex.run(iter_limit)?;
    Ok(simplex.into_result(status))
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    a: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    factor: Factor,
    iterations: usize,
    since_refactor: usize,
}

enum Phase {
    One,
    Two,
}

struct Step {
    /// Tableau row of the leaving variable, or `None` for a bound flip.
    row: Option<usize>,
    length: f64,
    leave_status: VarStatus,
}

impl<'a> Simplex<'a> {
    fn new(
        view: &'a LpView<'a>,
        lower: &[f64],
        upper: &[f64],
        warm: Option<&Basis>,
    ) -> Result<Self, LpError> {
        let n = view.num_vars();
        let m = view.num_rows();
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        lo.extend(std::iter::repeat_n(0.0, m));
        up.extend(std::iter::repeat_n(f64::INFINITY, m));

        let basis = match warm {
            Some(basis) => {
                if basis.var_status.len() != n || basis.row_status.len() != m || basis.num_basic() != m {
                    return Err(LpError::NumericalFailure);
                }
                basis.clone()
            }
            None => Basis::slack(lower, upper, m),
        };
        let mut status: Vec<VarStatus> = basis
            .var_status
            .iter()
            .chain(&basis.row_status)
            .copied()
            .collect();
        for j in 0..n + m {
            if status[j] != VarStatus::Basic {
                status[j] = nonbasic_status(status[j], lo[j], up[j]);
            }
        }
        let basics: Vec<usize> = (0..n + m).filter(|&j| status[j] == VarStatus::Basic).collect();
        let a = view.dense();
        let b = view.rhs().to_vec();
        let factor = Factor::new(&a, &b, n, &basics)?;
        let mut simplex = Simplex {
            n,
            m,
            cost: view.objective(),
            a,
            b,
            lo,
            up,
            status,
            x: vec![0.0; n + m],
            factor,
            iterations: 0,
            since_refactor: 0,
        };
        simplex.recompute_primal();
        Ok(simplex)
    }

    fn total(&self) -> usize {
        self.n + self.m
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.up[j],
            VarStatus::FreeNonbasic => 0.0,
            VarStatus::Basic => unreachable!("basic variable has no fixed value"),
        }
    }

    fn recompute_primal(&mut self) {
        let total = self.total();
        for j in 0..total {
            if self.status[j] != VarStatus::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        for r in 0..self.m {
            let row = self.factor.row(r);
            let mut v = self.factor.rhs(r);
            for j in 0..total {
                if self.status[j] != VarStatus::Basic && row[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.factor.head(r)] = v;
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let basics: Vec<usize> = (0..self.total())
            .filter(|&j| self.status[j] == VarStatus::Basic)
            .collect();
        self.factor = Factor::new(&self.a, &self.b, self.n, &basics)?;
        self.since_refactor = 0;
        self.recompute_primal();
        Ok(())
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lo[j] - PRIMAL_TOL {
            self.lo[j] - x
        } else if x > self.up[j] + PRIMAL_TOL {
            x - self.up[j]
        } else {
            0.0
        }
    }

    fn phase_objective(&self, phase: &Phase) -> f64 {
        match phase {
            Phase::One => (0..self.m).map(|r| self.infeasibility(self.factor.head(r))).sum(),
            Phase::Two => (0..self.n).map(|j| self.cost[j] * self.x[j]).sum(),
        }
    }

    /// Reduced costs of all variables for the current phase.
    fn reduced_costs(&self, phase: &Phase) -> Vec<f64> {
        let total = self.total();
        let mut basic_cost = vec![0.0; self.m];
        let mut d = vec![0.0; total];
        match phase {
            Phase::One => {
                for (r, c) in basic_cost.iter_mut().enumerate() {
                    let h = self.factor.head(r);
                    if self.x[h] < self.lo[h] - PRIMAL_TOL {
                        *c = -1.0;
                    } else if self.x[h] > self.up[h] + PRIMAL_TOL {
                        *c = 1.0;
                    }
                }
            }
            Phase::Two => {
                d[..self.n].copy_from_slice(self.cost);
                for (r, c) in basic_cost.iter_mut().enumerate() {
                    let h = self.factor.head(r);
                    if h < self.n {
                        *c = self.cost[h];
                    }
                }
            }
        }
        for (r, &c) in basic_cost.iter().enumerate() {
            if c != 0.0 {
                let row = self.factor.row(r);
                for j in 0..total {
                    d[j] -= c * row[j];
                }
            }
        }
        d
    }

    /// Picks the entering variable and its direction of motion.
    fn price(&self, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.total() {
            let dir = match self.status[j] {
                VarStatus::Basic => continue,
                _ if self.lo[j] == self.up[j] => continue,
                VarStatus::AtLower if d[j] < -DUAL_TOL => 1.0,
                VarStatus::AtUpper if d[j] > DUAL_TOL => -1.0,
                VarStatus::FreeNonbasic if d[j].abs() > DUAL_TOL => -d[j].signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = d[j].abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// First-breakpoint ratio test for entering variable `q` moving in `dir`.
    fn ratio_test(&self, q: usize, dir: f64) -> Option<Step> {
        let mut best: Option<(Step, usize)> = None;
        let consider = |step: Step, var: usize, best: &mut Option<(Step, usize)>| {
            let better = match best {
                None => true,
                Some((cur, cur_var)) => {
                    step.length < cur.length - 1e-12
                        || (step.length <= cur.length + 1e-12 && var < *cur_var)
                }
            };
            if better {
                *best = Some((step, var));
            }
        };
        if self.lo[q].is_finite() && self.up[q].is_finite() {
            let leave_status = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
            consider(
                Step {
                    row: None,
                    length: self.up[q] - self.lo[q],
                    leave_status,
                },
                q,
                &mut best,
            );
        }
        for r in 0..self.m {
            let alpha = self.factor.row(r)[q];
            if alpha.abs() < PIVOT_TOL {
                continue;
            }
            let h = self.factor.head(r);
            let rate = -alpha * dir;
            let x = self.x[h];
            let (target, leave_status) = if rate < 0.0 {
                if x < self.lo[h] - PRIMAL_TOL {
                    continue;
                } else if x > self.up[h] + PRIMAL_TOL {
                    (self.up[h], VarStatus::AtUpper)
                } else if self.lo[h].is_finite() {
                    (self.lo[h], VarStatus::AtLower)
                } else {
                    continue;
                }
            } else if x > self.up[h] + PRIMAL_TOL {
                continue;
            } else if x < self.lo[h] - PRIMAL_TOL {
                (self.lo[h], VarStatus::AtLower)
            } else if self.up[h].is_finite() {
                (self.up[h], VarStatus::AtUpper)
            } else {
                continue;
            };
            let length = ((target - x) / rate).max(0.0);
            consider(
                Step {
                    row: Some(r),
                    length,
                    leave_status,
                },
                h,
                &mut best,
            );
        }
        best.map(|(step, _)| step)
    }

    fn apply(&mut self, q: usize, dir: f64, step: Step) {
        let delta = dir * step.length;
        if delta != 0.0 {
            self.x[q] += delta;
            for r in 0..self.m {
                let alpha = self.factor.row(r)[q];
                if alpha != 0.0 {
                    let h = self.factor.head(r);
                    self.x[h] -= alpha * delta;
                }
            }
        }
        match step.row {
            None => {
                self.status[q] = step.leave_status;
                self.x[q] = self.nonbasic_value(q);
            }
            Some(r) => {
                let leaving = self.factor.head(r);
                self.factor.pivot(r, q);
                self.status[q] = VarStatus::Basic;
                self.status[leaving] = step.leave_status;
                self.x[leaving] = self.nonbasic_value(leaving);
                self.since_refactor += 1;
            }
        }
    }

    fn run(&mut self, limit: usize) -> Result<LpStatus, LpError> {
        let stall_limit = self.total().max(1);
        let mut bland = false;
        let mut stalled = 0usize;
        let mut last_phase_one = None;
        let mut best_obj = f64::INFINITY;
        loop {
            if self.since_refactor >= REFACTOR_INTERVAL {
                self.refactor()?;
            }
            let phase_one = (0..self.m).any(|r| self.infeasibility(self.factor.head(r)) > 0.0);
            let phase = if phase_one { Phase::One } else { Phase::Two };
            if last_phase_one != Some(phase_one) {
                // Progress is measured per phase.
                last_phase_one = Some(phase_one);
                best_obj = f64::INFINITY;
                stalled = 0;
                bland = false;
            }
            let d = self.reduced_costs(&phase);
            let Some((q, dir)) = self.price(&d, bland) else {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                return Ok(if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            };
            if self.iterations >= limit {
                return Ok(LpStatus::IterationLimit);
            }
            let Some(step) = self.ratio_test(q, dir) else {
                if phase_one {
                    return Err(LpError::NumericalFailure);
                }
                return Ok(LpStatus::Unbounded);
            };
            self.apply(q, dir, step);
            self.iterations += 1;

            let obj = self.phase_objective(&phase);
            if obj < best_obj - 1e-12 * (1.0 + obj.abs()) {
                best_obj = obj;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            }
        }
    }

    fn into_result(self, status: LpStatus) -> LpResult {
        let n = self.n;
        let objective = (0..n).map(|j| self.cost[j] * self.x[j]).sum();
        let row_basic = (0..self.m).map(|r| self.factor.head(r)).collect();
        LpResult {
            status,
            objective,
            primal: self.x[..n].to_vec(),
            slack: self.x[n..].to_vec(),
            basis: Basis {
                var_status: self.status[..n].to_vec(),
                row_status: self.status[n..].to_vec(),
                row_basic,
            },
            iterations: self.iterations,
        }
    }
}

/// Simplex tableau row of `basic_var` at the optimal basis of `result`.
pub fn tableau_row(
    result: &LpResult,
    view: &LpView<'_>,
    basic_var: usize,
) -> Result<TableauRow, LpError> {
    if result.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal);
    }
    let factor = Factor::from_basis(view, &result.basis)?;
    factor.tableau_row(basic_var).ok_or(LpError::NotBasic(basic_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, RowSense, INF};

    fn solve(model: &MipModel, limit: usize) -> LpResult {
        solve_view(&LpView::of_model(model), model.lower(), model.upper(), None, limit).unwrap()
    }

    #[test]
    fn two_var_simplex() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(0.0, 1.0, -1.0, false);
        let y = b.add_var(0.0, 1.0, -1.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
        let m = b.build().unwrap();
        let r = solve(&m, 100);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-12);
        // Dantzig picks x (lowest index among equal reduced costs), bound flip
        // on x, then y is blocked by the row.
        assert_eq!(r.primal, vec![1.0, 0.0]);
    }

    #[test]
    fn bound_optimum_without_rows() {
        let mut b = ModelBuilder::new("t");
        b.add_var(0.0, INF, 1.0, false);
        let m = b.build().unwrap();
        let r = solve(&m, 10);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.primal, vec![0.0]);
    }

    #[test]
    fn unbounded_without_rows() {
        let mut b = ModelBuilder::new("t");
        b.add_var(0.0, INF, -1.0, false);
        let m = b.build().unwrap();
        assert_eq!(solve(&m, 10).status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_limit_returns_partial_basis() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(0.0, INF, -1.0, false);
        let y = b.add_var(0.0, INF, -1.0, false);
        b.add_row(&[(x, 1.0), (y, 2.0)], RowSense::Le, 4.0);
        b.add_row(&[(x, 3.0), (y, 1.0)], RowSense::Le, 6.0);
        let m = b.build().unwrap();
        let full = solve(&m, 100);
        assert_eq!(full.status, LpStatus::Optimal);
        assert!(full.iterations > 1);
        let r = solve(&m, 1);
        assert_eq!(r.status, LpStatus::IterationLimit);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.basis.num_basic(), 2);
    }

    #[test]
    fn infeasible_detected() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(0.0, 10.0, 1.0, false);
        b.add_row(&[(x, 1.0)], RowSense::Ge, 11.0);
        let m = b.build().unwrap();
        assert_eq!(solve(&m, 100).status, LpStatus::Infeasible);
    }

    #[test]
    fn free_variable_and_equality() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(-INF, INF, 1.0, false);
        let y = b.add_var(0.0, 5.0, 2.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Eq, 3.0);
        b.add_row(&[(x, 1.0)], RowSense::Ge, -2.0);
        let m = b.build().unwrap();
        let r = solve(&m, 100);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(0.0, 4.0, -3.0, false);
        let y = b.add_var(0.0, 4.0, -2.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        b.add_row(&[(x, 1.0), (y, 3.0)], RowSense::Le, 6.0);
        let m = b.build().unwrap();
        let cold = solve(&m, 100);
        let view = LpView::of_model(&m);
        let upper = vec![2.5, 4.0];
        let warm = solve_view(&view, m.lower(), &upper, Some(&cold.basis), 100).unwrap();
        let again = solve_view(&view, m.lower(), &upper, None, 100).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - again.objective).abs() < 1e-9);
    }

    #[test]
    fn tableau_row_errors() {
        let mut b = ModelBuilder::new("t");
        let x = b.add_var(0.0, 10.0, -1.0, false);
        b.add_row(&[(x, 2.0)], RowSense::Le, 3.0);
        let m = b.build().unwrap();
        let r = solve(&m, 100);
        let view = LpView::of_model(&m);
        // x is basic at 1.5; the slack is nonbasic.
        let row = tableau_row(&r, &view, 0).unwrap();
        assert!((row.coeffs[0] - 1.0).abs() < 1e-12);
        assert!((row.coeffs[1] - 0.5).abs() < 1e-12);
        assert!((row.rhs - 1.5).abs() < 1e-12);
        assert_eq!(tableau_row(&r, &view, 1), Err(LpError::NotBasic(1)));
        let limited = LpResult {
            status: LpStatus::IterationLimit,
            ..r
        };
        assert_eq!(tableau_row(&limited, &view, 0), Err(LpError::NotOptimal));
    }
}
