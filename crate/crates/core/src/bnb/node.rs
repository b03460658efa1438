use serde::{Deserialize, Serialize};

use crate::domain::{BoundKind, Direction, Domain};
use crate::encode::Encoder;
use crate::lp::{Basis, VarStatus};
use crate::model::Tolerances;

/// One branching bound on the path from the root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDecision {
    pub var: usize,
    pub kind: BoundKind,
    pub value: f64,
}

impl BranchDecision {
    pub fn new(var: usize, direction: Direction, pivot: f64) -> Self {
        match direction {
            Direction::Down => Self {
                var,
                kind: BoundKind::Upper,
                value: pivot.floor(),
            },
            Direction::Up => Self {
                var,
                kind: BoundKind::Lower,
                value: pivot.ceil(),
            },
        }
    }

    /// The decision leaves no room inside `global`.
    pub fn conflicts_with(&self, global: &Domain, tol: &Tolerances) -> bool {
        match self.kind {
            BoundKind::Lower => self.value > global.upper()[self.var] + tol.feas_tol,
            BoundKind::Upper => self.value < global.lower()[self.var] - tol.feas_tol,
        }
    }
}

/// Identity of an LP row, so that a basis can be carried between LPs whose
/// cut rows differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKey {
    Model(usize),
    Cut(u64),
    /// Cut separated for the current dive only.
    Local(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredBasis {
    pub basis: Basis,
    pub rows: Vec<RowKey>,
}

impl StoredBasis {
    /// Maps the stored basis onto an LP with rows `keys`. Rows unknown to the
    /// stored basis get a basic slack; returns `None` when the resulting
    /// basic count does not match.
    pub fn remap(&self, keys: &[RowKey]) -> Option<Basis> {
        let n = self.basis.var_status.len();
        let row_status: Vec<VarStatus> = keys
            .iter()
            .map(|k| {
                self.rows
                    .iter()
                    .position(|r| r == k)
                    .map(|p| self.basis.row_status[p])
                    .unwrap_or(VarStatus::Basic)
            })
            .collect();
        let basis = Basis {
            var_status: self.basis.var_status.clone(),
            row_status,
            row_basic: Vec::new(),
        };
        let mut basics: Vec<usize> = (0..n)
            .filter(|&j| basis.var_status[j] == VarStatus::Basic)
            .collect();
        basics.extend(
            (0..keys.len())
                .filter(|&i| basis.row_status[i] == VarStatus::Basic)
                .map(|i| n + i),
        );
        if basics.len() != keys.len() {
            return None;
        }
        Some(Basis {
            row_basic: basics,
            ..basis
        })
    }
}

/// Statistics about how a node came to exist, used for dive features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub has_parent: bool,
    /// LP iterations spent evaluating the parent.
    pub eval_iterations: u64,
    pub fixed_vars: usize,
    pub fractional_vars: usize,
    /// Work units of the dive that created the node, up to its creation.
    pub parent_work_units: u64,
    /// Open nodes emitted by the dive that created the node.
    pub parent_open_children: usize,
    /// Times the node's LP stopped at the iteration limit.
    pub lp_retries: u32,
}

/// The branching step that created a node, for pseudocost updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParentBranch {
    pub var: usize,
    pub direction: Direction,
    /// Distance the branching moved the variable's LP value.
    pub distance: f64,
    pub parent_objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub depth: u32,
    pub lower_bound: f64,
    pub estimate: f64,
    pub branch_journal: Vec<BranchDecision>,
    pub basis_hint: Option<StoredBasis>,
    pub parent_branch: Option<ParentBranch>,
    pub info: NodeInfo,
}

impl TreeNode {
    pub fn root(lower_bound: f64) -> Self {
        Self {
            id: 0,
            parent_id: None,
            depth: 0,
            lower_bound,
            estimate: lower_bound,
            branch_journal: Vec::new(),
            basis_hint: None,
            parent_branch: None,
            info: NodeInfo::default(),
        }
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.id);
        enc.put_u64(self.parent_id.map_or(u64::MAX, |p| p));
        enc.put_u64(self.depth as u64);
        enc.put_f64(self.lower_bound);
        enc.put_f64(self.estimate);
        enc.put_usize(self.branch_journal.len());
        for d in &self.branch_journal {
            enc.put_usize(d.var);
            enc.put_tag(d.kind as u8);
            enc.put_f64(d.value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remap_adds_slack_rows() {
        let stored = StoredBasis {
            basis: Basis {
                var_status: vec![VarStatus::Basic, VarStatus::AtLower],
                row_status: vec![VarStatus::AtUpper],
                row_basic: vec![0],
            },
            rows: vec![RowKey::Model(0)],
        };
        let b = stored.remap(&[RowKey::Model(0), RowKey::Cut(3)]).unwrap();
        assert_eq!(b.row_status, vec![VarStatus::AtUpper, VarStatus::Basic]);
        assert_eq!(b.row_basic, vec![0, 3]);
        assert!(stored.remap(&[]).is_none());
    }

    #[test]
    fn decision_conflicts() {
        let tol = Tolerances::default();
        let global = Domain::new(vec![0.0], vec![4.0]);
        let d = BranchDecision::new(0, Direction::Up, 5.5);
        assert_eq!(d.value, 6.0);
        assert!(d.conflicts_with(&global, &tol));
        assert!(!BranchDecision::new(0, Direction::Down, 3.5).conflicts_with(&global, &tol));
    }
}
