//! Branch-path no-goods and their unit propagation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{BoundChange, BoundKind, Domain, PropResult, PropStatus, Reason};
use crate::encode::Encoder;
use crate::model::Tolerances;
use crate::pool::{Pool, PoolItem, PoolMeta};

pub const DEFAULT_CONFLICT_MAX_AGE: u32 = 20;
pub const DEFAULT_CONFLICT_CAPACITY: usize = 500;
const MAX_CONFLICT_ROUNDS: usize = 100;

/// `x >= value` for `Lower`, `x <= value` for `Upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub kind: BoundKind,
    pub value: f64,
}

impl Literal {
    /// The literal cannot hold anywhere in `domain`.
    pub fn violated(&self, domain: &Domain, tol: &Tolerances) -> bool {
        match self.kind {
            BoundKind::Lower => domain.upper()[self.var] < self.value - tol.feas_tol,
            BoundKind::Upper => domain.lower()[self.var] > self.value + tol.feas_tol,
        }
    }

    pub fn holds_at(&self, point: &[f64], tol: &Tolerances) -> bool {
        match self.kind {
            BoundKind::Lower => point[self.var] >= self.value - tol.feas_tol,
            BoundKind::Upper => point[self.var] <= self.value + tol.feas_tol,
        }
    }
}

/// Disjunction of literals, at least one of which holds in every feasible
/// solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictConstraint {
    pub literals: Vec<Literal>,
    pub meta: PoolMeta,
}

impl ConflictConstraint {
    pub fn id(&self) -> u64 {
        self.meta.id
    }

    pub fn satisfied_by(&self, point: &[f64], tol: &Tolerances) -> bool {
        self.literals.iter().any(|l| l.holds_at(point, tol))
    }
}

impl PoolItem for ConflictConstraint {
    fn meta(&self) -> &PoolMeta {
        &self.meta
    }

    fn meta_mut(&mut self) -> &mut PoolMeta {
        &mut self.meta
    }

    fn duplicates(&self, other: &Self) -> bool {
        self.literals.len() == other.literals.len()
            && self.literals.iter().zip(&other.literals).all(|(a, b)| {
                a.var == b.var && a.kind == b.kind && (a.value - b.value).abs() <= 1e-9
            })
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_usize(self.literals.len());
        for l in &self.literals {
            enc.put_usize(l.var);
            enc.put_tag(l.kind as u8);
            enc.put_f64(l.value);
        }
    }
}

pub type ConflictPool = Pool<ConflictConstraint>;

pub fn new_conflict_pool() -> ConflictPool {
    Pool::new(DEFAULT_CONFLICT_MAX_AGE, DEFAULT_CONFLICT_CAPACITY)
}

/// Negates the branching bounds recorded in `journal`. Only the tightest
/// branch per (variable, bound kind) is kept. Returns `None` when the path
/// contains no branching.
pub fn derive_conflict(journal: &[BoundChange]) -> Option<ConflictConstraint> {
    let mut tightest: Vec<(usize, BoundKind, f64)> = Vec::new();
    for change in journal.iter().filter(|c| c.reason == Reason::Branch) {
        match tightest
            .iter_mut()
            .find(|(v, k, _)| *v == change.var && *k == change.kind)
        {
            Some(entry) => entry.2 = change.new,
            None => tightest.push((change.var, change.kind, change.new)),
        }
    }
    if tightest.is_empty() {
        return None;
    }
    tightest.sort_by_key(|&(v, k, _)| (v, k));
    let literals = tightest
        .into_iter()
        .map(|(var, kind, value)| match kind {
            BoundKind::Upper => Literal {
                var,
                kind: BoundKind::Lower,
                value: value + 1.0,
            },
            BoundKind::Lower => Literal {
                var,
                kind: BoundKind::Upper,
                value: value - 1.0,
            },
        })
        .collect();
    Some(ConflictConstraint {
        literals,
        meta: PoolMeta::default(),
    })
}

/// Unit propagation over the pool in ascending id order, repeated until no
/// constraint fires. Returns the ids that tightened a bound or proved
/// infeasibility alongside the result.
pub fn conflict_propagate(
    domain: &mut Domain,
    pool: &ConflictPool,
    tol: &Tolerances,
) -> (PropResult, BTreeSet<u64>) {
    conflict_propagate_items(domain, pool.items(), tol)
}

pub fn conflict_propagate_items(
    domain: &mut Domain,
    conflicts: &[ConflictConstraint],
    tol: &Tolerances,
) -> (PropResult, BTreeSet<u64>) {
    let mut result = PropResult {
        status: PropStatus::Unchanged,
        rounds: 0,
        tightenings: 0,
    };
    let mut useful = BTreeSet::new();
    if domain.is_infeasible() {
        result.status = PropStatus::Infeasible;
        return (result, useful);
    }
    let mut changed = true;
    while changed && result.rounds < MAX_CONFLICT_ROUNDS {
        changed = false;
        result.rounds += 1;
        for c in conflicts {
            let mut open = None;
            let mut open_count = 0;
            for l in &c.literals {
                if !l.violated(domain, tol) {
                    open_count += 1;
                    open = Some(*l);
                    if open_count > 1 {
                        break;
                    }
                }
            }
            match (open_count, open) {
                (0, _) => {
                    domain.mark_infeasible();
                    useful.insert(c.id());
                    result.status = PropStatus::Infeasible;
                    return (result, useful);
                }
                (1, Some(l)) => {
                    if domain.tighten(l.var, l.kind, l.value, Reason::Conflict(c.id())) {
                        result.tightenings += 1;
                        useful.insert(c.id());
                        changed = true;
                        if domain.is_infeasible() {
                            result.status = PropStatus::Infeasible;
                            return (result, useful);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    if result.tightenings > 0 {
        result.status = PropStatus::Reduced;
    }
    (result, useful)
}

/// Ages the pool; see [`Pool::age`].
pub fn conflict_age(pool: &mut ConflictPool, useful_ids: &BTreeSet<u64>) -> usize {
    pool.age(useful_ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn branch(var: usize, kind: BoundKind, new: f64) -> BoundChange {
        BoundChange {
            var,
            kind,
            old: 0.0,
            new,
            reason: Reason::Branch,
        }
    }

    #[test]
    fn path_negation() {
        let journal = [
            branch(0, BoundKind::Upper, 3.0),
            BoundChange {
                reason: Reason::Propagation(0),
                ..branch(2, BoundKind::Upper, 1.0)
            },
            branch(1, BoundKind::Lower, 2.0),
        ];
        let c = derive_conflict(&journal).unwrap();
        assert_eq!(
            c.literals,
            vec![
                Literal {
                    var: 0,
                    kind: BoundKind::Lower,
                    value: 4.0
                },
                Literal {
                    var: 1,
                    kind: BoundKind::Upper,
                    value: 1.0
                },
            ]
        );
        assert!(derive_conflict(&[]).is_none());
        let single = derive_conflict(&[branch(0, BoundKind::Lower, 4.0)]).unwrap();
        assert_eq!(single.literals.len(), 1);
        assert_eq!(single.literals[0].kind, BoundKind::Upper);
        assert_eq!(single.literals[0].value, 3.0);
    }

    #[test]
    fn unit_propagation() {
        let tol = Tolerances::default();
        let mut pool = new_conflict_pool();
        pool.add([derive_conflict(&[
            branch(0, BoundKind::Upper, 3.0),
            branch(1, BoundKind::Lower, 2.0),
        ])
        .unwrap()]);
        let mut d = Domain::new(vec![0.0, 0.0], vec![3.0, 5.0]);
        let (r, used) = conflict_propagate(&mut d, &pool, &tol);
        assert_eq!(r.status, PropStatus::Reduced);
        assert_eq!(d.upper()[1], 1.0);
        assert_eq!(used.into_iter().collect::<Vec<_>>(), vec![0]);
        let (again, _) = conflict_propagate(&mut d, &pool, &tol);
        assert_eq!(again.status, PropStatus::Unchanged);

        let mut d = Domain::new(vec![0.0, 3.0], vec![3.0, 5.0]);
        let (r, _) = conflict_propagate(&mut d, &pool, &tol);
        assert_eq!(r.status, PropStatus::Infeasible);

        let mut d = Domain::new(vec![0.0], vec![1.0]);
        let (r, _) = conflict_propagate(&mut d, &new_conflict_pool(), &tol);
        assert_eq!(r.status, PropStatus::Unchanged);
    }

    #[test]
    fn aging() {
        let mut pool = new_conflict_pool();
        pool.add([derive_conflict(&[branch(0, BoundKind::Upper, 3.0)]).unwrap()]);
        let none = BTreeSet::new();
        for _ in 0..DEFAULT_CONFLICT_MAX_AGE {
            assert_eq!(conflict_age(&mut pool, &none), 0);
        }
        assert_eq!(conflict_age(&mut pool, &none), 1);
        assert_eq!(conflict_age(&mut new_conflict_pool(), &none), 0);

        let mut pool = new_conflict_pool();
        pool.add([derive_conflict(&[branch(0, BoundKind::Upper, 3.0)]).unwrap()]);
        conflict_age(&mut pool, &none);
        conflict_age(&mut pool, &BTreeSet::from([0]));
        assert_eq!(pool.items()[0].meta.age, 0);
    }
}
