use serde::{Deserialize, Serialize};

use super::{Basis, LpError, LpView, VarStatus, PIVOT_TOL};

/// Row of the simplex tableau `B^-1 [A I]` for one basic variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableauRow {
    pub var: usize,
    /// Coefficients over structurals followed by slacks.
    pub coeffs: Vec<f64>,
    /// Entry of `B^-1 b`.
    pub rhs: f64,
}

/// Explicit tableau for a basis, kept up to date by pivoting.
#[derive(Clone, Debug)]
pub struct Factor {
    m: usize,
    total: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    head: Vec<usize>,
}

impl Factor {
    /// Gauss-Jordan factorization of the columns `basics` of `[A I]`.
    pub fn new(a: &[f64], b: &[f64], n: usize, basics: &[usize]) -> Result<Self, LpError> {
        let m = b.len();
        if basics.len() != m {
            return Err(LpError::NumericalFailure);
        }
        let total = n + m;
        let mut t = vec![0.0; m * total];
        for i in 0..m {
            t[i * total..i * total + n].copy_from_slice(&a[i * n..(i + 1) * n]);
            t[i * total + n + i] = 1.0;
        }
        let mut factor = Factor {
            m,
            total,
            t,
            beta: b.to_vec(),
            head: vec![usize::MAX; m],
        };
        let mut used = vec![false; m];
        for &c in basics {
            let mut pivot_row = None;
            let mut best = PIVOT_TOL;
            for (r, &u) in used.iter().enumerate() {
                let v = factor.t[r * total + c].abs();
                if !u && v > best {
                    best = v;
                    pivot_row = Some(r);
                }
            }
            let r = pivot_row.ok_or(LpError::NumericalFailure)?;
            used[r] = true;
            factor.eliminate(r, c);
            factor.head[r] = c;
        }
        Ok(factor)
    }

    pub fn from_basis(view: &LpView<'_>, basis: &Basis) -> Result<Self, LpError> {
        let n = view.num_vars();
        let basics: Vec<usize> = (0..n + view.num_rows())
            .filter(|&j| basis.status(j) == VarStatus::Basic)
            .collect();
        let mut factor = Factor::new(&view.dense(), view.rhs(), n, &basics)?;
        // Reorder rows to match the stored row assignment when it is consistent.
        if basis.row_basic.len() == factor.m {
            let mut pos = vec![usize::MAX; factor.total];
            for (r, &h) in factor.head.iter().enumerate() {
                pos[h] = r;
            }
            if basis.row_basic.iter().all(|&h| h < factor.total && pos[h] != usize::MAX) {
                let mut t = vec![0.0; factor.t.len()];
                let mut beta = vec![0.0; factor.m];
                for (r, &h) in basis.row_basic.iter().enumerate() {
                    let src = pos[h];
                    t[r * factor.total..(r + 1) * factor.total]
                        .copy_from_slice(&factor.t[src * factor.total..(src + 1) * factor.total]);
                    beta[r] = factor.beta[src];
                }
                factor.t = t;
                factor.beta = beta;
                factor.head = basis.row_basic.clone();
            }
        }
        Ok(factor)
    }

    fn eliminate(&mut self, r: usize, c: usize) {
        let total = self.total;
        let p = self.t[r * total + c];
        for j in 0..total {
            self.t[r * total + j] /= p;
        }
        self.beta[r] /= p;
        self.t[r * total + c] = 1.0;
        let (pivot_row, beta_r) = (self.t[r * total..(r + 1) * total].to_vec(), self.beta[r]);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * total + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * total..(i + 1) * total];
            for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                if pv != 0.0 {
                    *x -= f * pv;
                }
            }
            row[c] = 0.0;
            self.beta[i] -= f * beta_r;
        }
    }

    /// Replaces the basic variable of row `r` by `q`.
    pub fn pivot(&mut self, r: usize, q: usize) {
        self.eliminate(r, q);
        self.head[r] = q;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.total..(r + 1) * self.total]
    }

    pub fn rhs(&self, r: usize) -> f64 {
        self.beta[r]
    }

    pub fn head(&self, r: usize) -> usize {
        self.head[r]
    }

    pub fn tableau_row(&self, var: usize) -> Option<TableauRow> {
        let r = self.head.iter().position(|&h| h == var)?;
        Some(TableauRow {
            var,
            coeffs: self.row(r).to_vec(),
            rhs: self.beta[r],
        })
    }
}
