//! Variable domains, activity-based bound propagation and branching.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnb::NodeQueue;
use crate::encode::Encoder;
use crate::model::{MipModel, SparseRow, Tolerances};

pub const DEFAULT_MAX_ROUNDS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    Branch,
    /// Activity propagation on model row `i`.
    Propagation(usize),
    /// Unit propagation of conflict constraint `id`.
    Conflict(u64),
    /// Replay of a deduction from another domain.
    Global,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundChange {
    pub var: usize,
    pub kind: BoundKind,
    pub old: f64,
    pub new: f64,
    pub reason: Reason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Down,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropStatus {
    Reduced,
    Unchanged,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropResult {
    pub status: PropStatus,
    pub rounds: usize,
    pub tightenings: usize,
}

impl PropResult {
    pub fn infeasible(&self) -> bool {
        self.status == PropStatus::Infeasible
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("branching pivot {0} is integral")]
    NotFractional(f64),
    #[error("variable {0} is not integer")]
    NotInteger(usize),
}

/// Per-node variable bounds with a journal of every change.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    journal: Vec<BoundChange>,
    infeasible: bool,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        let infeasible = lower.iter().zip(&upper).any(|(l, u)| l > u);
        Self {
            lower,
            upper,
            journal: Vec::new(),
            infeasible,
        }
    }

    /// The model's own bounds, with integer bounds rounded inwards.
    pub fn from_model(model: &MipModel) -> Self {
        let mut d = Self::new(model.lower().to_vec(), model.upper().to_vec());
        for &j in model.integer_set() {
            if d.lower[j].is_finite() {
                d.lower[j] = (d.lower[j] - 1e-9).ceil();
            }
            if d.upper[j].is_finite() {
                d.upper[j] = (d.upper[j] + 1e-9).floor();
            }
            if d.lower[j] > d.upper[j] {
                d.infeasible = true;
            }
        }
        d
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn journal(&self) -> &[BoundChange] {
        &self.journal
    }

    pub fn clear_journal(&mut self) {
        self.journal.clear();
    }

    pub fn take_journal(&mut self) -> Vec<BoundChange> {
        std::mem::take(&mut self.journal)
    }

    pub fn is_infeasible(&self) -> bool {
        self.infeasible
    }

    pub fn mark_infeasible(&mut self) {
        self.infeasible = true;
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    pub fn num_fixed(&self, vars: &[usize]) -> usize {
        vars.iter().filter(|&&j| self.is_fixed(j)).count()
    }

    pub fn bound(&self, var: usize, kind: BoundKind) -> f64 {
        match kind {
            BoundKind::Lower => self.lower[var],
            BoundKind::Upper => self.upper[var],
        }
    }

    /// Raises `lower[var]` to `value` if that is tighter. Returns whether the
    /// bound changed. Crossing bounds set the infeasible flag.
    pub fn tighten_lower(&mut self, var: usize, value: f64, reason: Reason) -> bool {
        if value <= self.lower[var] {
            return false;
        }
        self.journal.push(BoundChange {
            var,
            kind: BoundKind::Lower,
            old: self.lower[var],
            new: value,
            reason,
        });
        self.lower[var] = value;
        if value > self.upper[var] {
            self.infeasible = true;
        }
        true
    }

    pub fn tighten_upper(&mut self, var: usize, value: f64, reason: Reason) -> bool {
        if value >= self.upper[var] {
            return false;
        }
        self.journal.push(BoundChange {
            var,
            kind: BoundKind::Upper,
            old: self.upper[var],
            new: value,
            reason,
        });
        self.upper[var] = value;
        if value < self.lower[var] {
            self.infeasible = true;
        }
        true
    }

    pub fn tighten(&mut self, var: usize, kind: BoundKind, value: f64, reason: Reason) -> bool {
        match kind {
            BoundKind::Lower => self.tighten_lower(var, value, reason),
            BoundKind::Upper => self.tighten_upper(var, value, reason),
        }
    }

    /// Intersects this domain with `other`, recording changes with `reason`.
    pub fn intersect(&mut self, other: &Domain, reason: Reason) -> usize {
        let mut changed = 0;
        for j in 0..self.len() {
            changed += self.tighten_lower(j, other.lower[j], reason) as usize;
            changed += self.tighten_upper(j, other.upper[j], reason) as usize;
        }
        if other.infeasible {
            self.infeasible = true;
        }
        changed
    }

    /// Whether `point` lies in the box within `tol`.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point
            .iter()
            .enumerate()
            .all(|(j, &x)| x >= self.lower[j] - tol && x <= self.upper[j] + tol)
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.put_f64s(&self.lower);
        enc.put_f64s(&self.upper);
        enc.put_bool(self.infeasible);
    }
}

/// Branches on integer variable `var` at the fractional value `pivot`.
pub fn apply_branch(
    domain: &mut Domain,
    model: &MipModel,
    tol: &Tolerances,
    var: usize,
    direction: Direction,
    pivot: f64,
) -> Result<(), DomainError> {
    if !model.is_integer(var) {
        return Err(DomainError::NotInteger(var));
    }
    if tol.is_integral(pivot) {
        return Err(DomainError::NotFractional(pivot));
    }
    match direction {
        Direction::Down => domain.tighten_upper(var, pivot.floor(), Reason::Branch),
        Direction::Up => domain.tighten_lower(var, pivot.ceil(), Reason::Branch),
    };
    Ok(())
}

/// Minimum activity of a row split into its finite part and the infinite
/// contributors.
struct MinActivity {
    finite: f64,
    inf_count: usize,
    inf_var: usize,
}

fn min_activity(row: &SparseRow, lower: &[f64], upper: &[f64]) -> MinActivity {
    let mut act = MinActivity {
        finite: 0.0,
        inf_count: 0,
        inf_var: usize::MAX,
    };
    for (j, a) in row.iter() {
        let bound = if a > 0.0 { lower[j] } else { upper[j] };
        if bound.is_finite() {
            act.finite += a * bound;
        } else {
            act.inf_count += 1;
            act.inf_var = j;
        }
    }
    act
}

fn significant(old: f64, new: f64) -> bool {
    (new - old).abs() > 1e-7 * old.abs().max(1.0) || !old.is_finite()
}

/// Activity-based bound tightening over the `<=` rows `rows`/`rhs`.
///
/// Rows are revisited in ascending index order whenever one of their
/// variables changed, until nothing changes or `max_rounds` is reached.
pub fn propagate_rows(
    domain: &mut Domain,
    rows: &[SparseRow],
    rhs: &[f64],
    columns: impl Fn(usize) -> Vec<usize>,
    integer: &[bool],
    tol: &Tolerances,
    max_rounds: usize,
) -> PropResult {
    let mut result = PropResult {
        status: PropStatus::Unchanged,
        rounds: 0,
        tightenings: 0,
    };
    if domain.infeasible {
        result.status = PropStatus::Infeasible;
        return result;
    }
    let mut dirty: BTreeSet<usize> = (0..rows.len()).collect();
    while !dirty.is_empty() && result.rounds < max_rounds {
        result.rounds += 1;
        let current = std::mem::take(&mut dirty);
        for i in current {
            let row = &rows[i];
            let b = rhs[i];
            let act = min_activity(row, &domain.lower, &domain.upper);
            if act.inf_count == 0 && act.finite > b + tol.feas_tol {
                domain.infeasible = true;
                result.status = PropStatus::Infeasible;
                return result;
            }
            if act.inf_count > 1 {
                continue;
            }
            for (j, a) in row.iter() {
                let own = if a > 0.0 { domain.lower[j] } else { domain.upper[j] };
                let residual = if act.inf_count == 0 {
                    act.finite - a * own
                } else if act.inf_var == j {
                    act.finite
                } else {
                    continue;
                };
                let slack = b + tol.feas_tol - residual;
                let changed = if a > 0.0 {
                    let mut new = slack / a;
                    if integer[j] {
                        new = (new + tol.int_tol).floor();
                    }
                    let old = domain.upper[j];
                    if new < old && (integer[j] || significant(old, new)) {
                        if !integer[j] && new < domain.lower[j] && new >= domain.lower[j] - tol.feas_tol {
                            new = domain.lower[j];
                        }
                        domain.tighten_upper(j, new, Reason::Propagation(i))
                    } else {
                        false
                    }
                } else {
                    let mut new = slack / a;
                    if integer[j] {
                        new = (new - tol.int_tol).ceil();
                    }
                    let old = domain.lower[j];
                    if new > old && (integer[j] || significant(old, new)) {
                        if !integer[j] && new > domain.upper[j] && new <= domain.upper[j] + tol.feas_tol {
                            new = domain.upper[j];
                        }
                        domain.tighten_lower(j, new, Reason::Propagation(i))
                    } else {
                        false
                    }
                };
                if changed {
                    result.tightenings += 1;
                    if domain.infeasible {
                        result.status = PropStatus::Infeasible;
                        return result;
                    }
                    dirty.extend(columns(j));
                }
            }
        }
    }
    if result.tightenings > 0 {
        result.status = PropStatus::Reduced;
    }
    result
}

/// Propagates the model rows over `domain`.
pub fn propagate(
    domain: &mut Domain,
    model: &MipModel,
    tol: &Tolerances,
    max_rounds: usize,
) -> PropResult {
    propagate_rows(
        domain,
        model.rows(),
        model.rhs(),
        |j| model.column(j).iter().map(|&(i, _)| i).collect(),
        model.integrality(),
        tol,
        max_rounds,
    )
}

/// Removes queue nodes dominated by the incumbent or contradicting the global
/// domain. Nodes are scanned in id order.
pub fn prune_queue(
    queue: &mut NodeQueue,
    global: &Domain,
    incumbent_obj: f64,
    tol: &Tolerances,
) -> usize {
    let doomed: Vec<u64> = queue
        .iter()
        .filter(|node| {
            node.lower_bound >= incumbent_obj - tol.opt_gap_abs
                || global.is_infeasible()
                || node.branch_journal.iter().any(|d| d.conflicts_with(global, tol))
        })
        .map(|node| node.id)
        .collect();
    for id in &doomed {
        queue.remove(*id);
    }
    doomed.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, RowSense};

    fn knap() -> MipModel {
        let mut b = ModelBuilder::new("p");
        let x = b.add_var(0.0, 10.0, 0.0, true);
        let y = b.add_var(0.0, 10.0, 0.0, true);
        b.add_row(&[(x, 2.0), (y, 3.0)], RowSense::Le, 12.0);
        b.build().unwrap()
    }

    #[test]
    fn single_row_tightening() {
        let m = knap();
        let mut d = Domain::from_model(&m);
        let r = propagate(&mut d, &m, &Tolerances::default(), DEFAULT_MAX_ROUNDS);
        assert_eq!(r.status, PropStatus::Reduced);
        assert_eq!(d.upper(), &[6.0, 4.0]);
        let again = propagate(&mut d, &m, &Tolerances::default(), DEFAULT_MAX_ROUNDS);
        assert_eq!(again.status, PropStatus::Unchanged);
    }

    #[test]
    fn infeasible_row() {
        let mut b = ModelBuilder::new("p");
        let x = b.add_var(0.0, 10.0, 0.0, false);
        let y = b.add_var(0.0, 10.0, 0.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, -1.0);
        let m = b.build().unwrap();
        let mut d = Domain::from_model(&m);
        let r = propagate(&mut d, &m, &Tolerances::default(), DEFAULT_MAX_ROUNDS);
        assert_eq!(r.status, PropStatus::Infeasible);
        assert!(d.is_infeasible());
    }

    #[test]
    fn empty_model_unchanged() {
        let m = ModelBuilder::new("e").build().unwrap();
        let mut d = Domain::from_model(&m);
        let r = propagate(&mut d, &m, &Tolerances::default(), DEFAULT_MAX_ROUNDS);
        assert_eq!(r.status, PropStatus::Unchanged);
        assert_eq!(r.tightenings, 0);
    }

    #[test]
    fn branching() {
        let m = knap();
        let tol = Tolerances::default();
        let mut d = Domain::from_model(&m);
        apply_branch(&mut d, &m, &tol, 0, Direction::Down, 3.7).unwrap();
        assert_eq!((d.lower()[0], d.upper()[0]), (0.0, 3.0));
        assert_eq!(d.journal()[0].reason, Reason::Branch);
        let mut d = Domain::from_model(&m);
        apply_branch(&mut d, &m, &tol, 0, Direction::Up, 3.7).unwrap();
        assert_eq!((d.lower()[0], d.upper()[0]), (4.0, 10.0));
        assert_eq!(
            apply_branch(&mut d, &m, &tol, 0, Direction::Up, 4.0),
            Err(DomainError::NotFractional(4.0))
        );
    }

    #[test]
    fn infinite_partner_bounds_are_skipped() {
        let mut b = ModelBuilder::new("p");
        let x = b.add_var(f64::NEG_INFINITY, 10.0, 0.0, false);
        let y = b.add_var(f64::NEG_INFINITY, 10.0, 0.0, false);
        let z = b.add_var(0.0, 10.0, 0.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0), (z, 1.0)], RowSense::Le, 5.0);
        let m = b.build().unwrap();
        let mut d = Domain::from_model(&m);
        let r = propagate(&mut d, &m, &Tolerances::default(), DEFAULT_MAX_ROUNDS);
        assert_eq!(r.status, PropStatus::Unchanged);
    }
}
