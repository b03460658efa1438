//! Reduced presolve: one propagation pass, fixed-variable elimination and
//! empty-row removal.

use crate::domain::{propagate, Domain, DEFAULT_MAX_ROUNDS};
use crate::model::{MipModel, SparseRow, Tolerances};

/// Maps points of the presolved model back to the original variable space.
#[derive(Clone, Debug, PartialEq)]
pub struct PostsolveMap {
    orig_n: usize,
    /// Original index of each presolved variable.
    kept: Vec<usize>,
    fixed: Vec<(usize, f64)>,
}

impl PostsolveMap {
    pub fn identity(n: usize) -> Self {
        Self {
            orig_n: n,
            kept: (0..n).collect(),
            fixed: Vec::new(),
        }
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.orig_n];
        for (k, &j) in self.kept.iter().enumerate() {
            out[j] = x[k];
        }
        for &(j, v) in &self.fixed {
            out[j] = v;
        }
        out
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.kept.iter().map(|&j| x[j]).collect()
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.len()
    }
}

#[derive(Clone, Debug)]
pub enum PresolveOutcome {
    Reduced { model: MipModel, map: PostsolveMap },
    Infeasible,
}

pub fn presolve(model: &MipModel, tol: &Tolerances) -> PresolveOutcome {
    if model.empty_domain().is_some() {
        return PresolveOutcome::Infeasible;
    }
    let mut domain = Domain::from_model(model);
    if domain.is_infeasible() {
        return PresolveOutcome::Infeasible;
    }
    if propagate(&mut domain, model, tol, DEFAULT_MAX_ROUNDS).infeasible() {
        return PresolveOutcome::Infeasible;
    }
    let n = model.num_vars();
    let fixed: Vec<(usize, f64)> = (0..n)
        .filter(|&j| domain.is_fixed(j))
        .map(|j| (j, domain.lower()[j]))
        .collect();
    let mut is_fixed = vec![false; n];
    for &(j, _) in &fixed {
        is_fixed[j] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&j| !is_fixed[j]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &j) in kept.iter().enumerate() {
        new_index[j] = k;
    }

    let mut offset = model.objective_offset();
    for &(j, v) in &fixed {
        offset += model.objective()[j] * v;
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut row_names = Vec::new();
    for (i, row) in model.rows().iter().enumerate() {
        let mut b = model.rhs()[i];
        let mut pairs = Vec::new();
        for (j, a) in row.iter() {
            if is_fixed[j] {
                b -= a * domain.lower()[j];
            } else {
                pairs.push((new_index[j], a));
            }
        }
        if pairs.is_empty() {
            if b < -tol.feas_tol {
                return PresolveOutcome::Infeasible;
            }
            continue;
        }
        rows.push(SparseRow::from_pairs(pairs));
        rhs.push(b);
        row_names.push(model.row_names()[i].clone());
    }
    let reduced = MipModel::from_parts(
        model.name().to_string(),
        model.objective_sense(),
        kept.iter().map(|&j| model.objective()[j]).collect(),
        offset,
        rows,
        rhs,
        row_names,
        kept.iter().map(|&j| model.col_names()[j].clone()).collect(),
        kept.iter().map(|&j| domain.lower()[j]).collect(),
        kept.iter().map(|&j| domain.upper()[j]).collect(),
        kept.iter().map(|&j| model.is_integer(j)).collect(),
    );
    PresolveOutcome::Reduced {
        model: reduced,
        map: PostsolveMap {
            orig_n: n,
            kept,
            fixed,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, RowSense};

    #[test]
    fn fixed_variables_are_eliminated() {
        let mut b = ModelBuilder::new("p");
        let x = b.add_var(2.0, 2.0, 3.0, true);
        let y = b.add_var(0.0, 5.0, 1.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        b.add_row(&[(x, 1.0)], RowSense::Le, 3.0);
        let m = b.build().unwrap();
        let PresolveOutcome::Reduced { model, map } = presolve(&m, &Tolerances::default()) else {
            panic!("infeasible");
        };
        assert_eq!(model.num_vars(), 1);
        assert_eq!(model.num_cons(), 1);
        assert_eq!(model.rhs(), &[2.0]);
        assert_eq!(model.objective_offset(), 6.0);
        assert_eq!(map.expand(&[1.5]), vec![2.0, 1.5]);
    }

    #[test]
    fn violated_empty_row_is_infeasible() {
        let mut b = ModelBuilder::new("p");
        let x = b.add_var(0.0, 1.0, 1.0, false);
        b.add_row(&[], RowSense::Le, -1.0);
        b.add_row(&[(x, 1.0)], RowSense::Le, 1.0);
        let m = b.build().unwrap();
        assert!(matches!(
            presolve(&m, &Tolerances::default()),
            PresolveOutcome::Infeasible
        ));
    }
}
