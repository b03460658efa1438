//! MIP formulation: `min c^T x` subject to `Ax <= b`, `l <= x <= u`, and
//! integrality on a subset of the columns.
//!
//! Models are normalized on construction. Every row is stored in `<=` form
//! (`>=` rows are negated, equality rows are split into a pair of `<=` rows)
//! and the objective is stored in minimization sense. The original sense is
//! remembered so that reported objective values can be restored.

mod mps;
mod oracle;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mps::{parse_mps, write_mps, MpsError};
pub use oracle::{brute_force_optimum, Enumeration};

/// Sentinel for unbounded variable bounds. Arithmetic involving it is always
/// guarded with `is_finite` checks.
pub const INF: f64 = f64::INFINITY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Min,
    Max,
}

impl ObjSense {
    /// Factor mapping an internal (minimization) objective to the original sense.
    pub fn sign(self) -> f64 {
        match self {
            ObjSense::Min => 1.0,
            ObjSense::Max => -1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("non-finite coefficient in {0}")]
    NonFiniteCoefficient(String),
    #[error("integer variable {0} has an infinite bound; enumeration needs finite bounds")]
    UnboundedInteger(usize),
    #[error("invalid tolerance `{0}`: must be strictly positive")]
    InvalidTolerance(&'static str),
}

/// Feasibility, integrality and gap tolerances shared by every component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub int_tol: f64,
    pub feas_tol: f64,
    pub opt_gap_abs: f64,
    pub opt_gap_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            int_tol: 1e-6,
            feas_tol: 1e-6,
            opt_gap_abs: 1e-9,
            opt_gap_rel: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn new(
        int_tol: f64,
        feas_tol: f64,
        opt_gap_abs: f64,
        opt_gap_rel: f64,
    ) -> Result<Self, ModelError> {
        let tol = Self {
            int_tol,
            feas_tol,
            opt_gap_abs,
            opt_gap_rel,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let checks = [
            (self.int_tol, "int_tol"),
            (self.feas_tol, "feas_tol"),
            (self.opt_gap_abs, "opt_gap_abs"),
            (self.opt_gap_rel, "opt_gap_rel"),
        ];
        for (value, name) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidTolerance(name));
            }
        }
        Ok(())
    }

    /// Distance of `value` to its nearest integer, compared against `int_tol`.
    pub fn is_integral(&self, value: f64) -> bool {
        (value - value.round()).abs() <= self.int_tol
    }

    /// Largest gap at which an incumbent is accepted as optimal.
    pub fn gap_limit(&self, incumbent: f64) -> f64 {
        self.opt_gap_abs.max(self.opt_gap_rel * incumbent.abs())
    }
}

/// A sparse row (or column) with sorted, distinct indices and no zero entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    /// Builds a row from unsorted `(index, value)` pairs. Repeated indices are
    /// summed and exact zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|&(j, _)| j);
        let mut row = SparseRow::default();
        for (j, v) in pairs {
            if row.indices.last() == Some(&j) {
                *row.values.last_mut().unwrap() += v;
            } else {
                row.indices.push(j);
                row.values.push(v);
            }
        }
        row.retain(|_, v| v != 0.0);
        row
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * x[j]).sum()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(usize, f64) -> bool) {
        let mut w = 0;
        for r in 0..self.indices.len() {
            let (j, v) = (self.indices[r], self.values[r]);
            if keep(j, v) {
                self.indices[w] = j;
                self.values[w] = v;
                w += 1;
            }
        }
        self.indices.truncate(w);
        self.values.truncate(w);
    }

    pub fn negated(&self) -> SparseRow {
        SparseRow {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

#[derive(Clone, Debug)]
struct VarSpec {
    name: String,
    lower: f64,
    upper: f64,
    obj: f64,
    integer: bool,
}

#[derive(Clone, Debug)]
struct RowSpec {
    name: String,
    row: SparseRow,
    sense: RowSense,
    rhs: f64,
}

/// Incremental constructor for [`MipModel`]. Objective coefficients and the
/// offset are given in the model's original sense.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    name: String,
    objective_name: String,
    sense: ObjSense,
    offset: f64,
    vars: Vec<VarSpec>,
    rows: Vec<RowSpec>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            objective_name: "obj".to_string(),
            sense: ObjSense::Min,
            offset: 0.0,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn sense(mut self, sense: ObjSense) -> Self {
        self.sense = sense;
        self
    }

    pub fn set_sense(&mut self, sense: ObjSense) {
        self.sense = sense;
    }

    pub fn set_objective_name(&mut self, name: impl Into<String>) {
        self.objective_name = name.into();
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, obj: f64, integer: bool) -> usize {
        let name = format!("x{}", self.vars.len());
        self.add_named_var(name, lower, upper, obj, integer)
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
        integer: bool,
    ) -> usize {
        self.vars.push(VarSpec {
            name: name.into(),
            lower,
            upper,
            obj,
            integer,
        });
        self.vars.len() - 1
    }

    pub fn set_var_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.vars[var].lower = lower;
        self.vars[var].upper = upper;
    }

    pub fn set_integer(&mut self, var: usize, integer: bool) {
        self.vars[var].integer = integer;
    }

    pub fn set_objective(&mut self, var: usize, obj: f64) {
        self.vars[var].obj = obj;
    }

    pub fn add_row(&mut self, coeffs: &[(usize, f64)], sense: RowSense, rhs: f64) {
        let name = format!("r{}", self.rows.len());
        self.add_named_row(name, coeffs, sense, rhs);
    }

    pub fn add_named_row(
        &mut self,
        name: impl Into<String>,
        coeffs: &[(usize, f64)],
        sense: RowSense,
        rhs: f64,
    ) {
        self.rows.push(RowSpec {
            name: name.into(),
            row: SparseRow::from_pairs(coeffs.iter().copied()),
            sense,
            rhs,
        });
    }

    pub fn build(self) -> Result<MipModel, ModelError> {
        let n = self.vars.len();
        let sign = self.sense.sign();
        let mut names = std::collections::BTreeSet::new();
        for v in &self.vars {
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
            if !v.obj.is_finite() || v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::NonFiniteCoefficient(v.name.clone()));
            }
        }

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut row_names = Vec::new();
        for spec in &self.rows {
            if let Some(&j) = spec.row.indices.iter().find(|&&j| j >= n) {
                return Err(ModelError::VariableOutOfRange {
                    index: j,
                    num_vars: n,
                });
            }
            if spec.row.values.iter().any(|v| !v.is_finite()) || !spec.rhs.is_finite() {
                return Err(ModelError::NonFiniteCoefficient(spec.name.clone()));
            }
            match spec.sense {
                RowSense::Le => {
                    rows.push(spec.row.clone());
                    rhs.push(spec.rhs);
                    row_names.push(spec.name.clone());
                }
                RowSense::Ge => {
                    rows.push(spec.row.negated());
                    rhs.push(-spec.rhs);
                    row_names.push(spec.name.clone());
                }
                RowSense::Eq => {
                    rows.push(spec.row.clone());
                    rhs.push(spec.rhs);
                    row_names.push(spec.name.clone());
                    rows.push(spec.row.negated());
                    rhs.push(-spec.rhs);
                    row_names.push(format!("{}.neg", spec.name));
                }
            }
        }
        let mut row_set = std::collections::BTreeSet::new();
        for name in &row_names {
            if !row_set.insert(name.as_str()) || *name == self.objective_name {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }

        let integer: Vec<bool> = self.vars.iter().map(|v| v.integer).collect();
        let integer_set = (0..n).filter(|&j| integer[j]).collect();
        let mut model = MipModel {
            name: self.name,
            objective_name: self.objective_name,
            objective_sense: self.sense,
            objective: self.vars.iter().map(|v| sign * v.obj).collect(),
            objective_offset: sign * self.offset,
            rows,
            rhs,
            row_names,
            col_names: self.vars.iter().map(|v| v.name.clone()).collect(),
            lower: self.vars.iter().map(|v| v.lower).collect(),
            upper: self.vars.iter().map(|v| v.upper).collect(),
            integer,
            integer_set,
            columns: Vec::new(),
        };
        model.rebuild_columns();
        Ok(model)
    }
}

/// Immutable, normalized MIP instance.
#[derive(Clone, Debug, PartialEq)]
pub struct MipModel {
    name: String,
    objective_name: String,
    objective_sense: ObjSense,
    /// Minimization-sense objective.
    objective: Vec<f64>,
    objective_offset: f64,
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
    row_names: Vec<String>,
    col_names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer: Vec<bool>,
    integer_set: Vec<usize>,
    /// Column-wise view: `(row, coefficient)` per variable.
    columns: Vec<Vec<(usize, f64)>>,
}

/// Result of [`check_feasible`]. Only the first violation of each kind is
/// reported.
#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated_row: Option<usize>,
    pub violated_bound: Option<usize>,
    pub violated_integrality: Option<usize>,
}

impl MipModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objective_name(&self) -> &str {
        &self.objective_name
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_cons(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_sense(&self) -> ObjSense {
        self.objective_sense
    }

    /// Minimization-sense objective coefficients.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integer[j]
    }

    pub fn integrality(&self) -> &[bool] {
        &self.integer
    }

    /// Strictly increasing indices of the integer variables.
    pub fn integer_set(&self) -> &[usize] {
        &self.integer_set
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    /// First variable whose bounds are empty, if any. Such a model is
    /// trivially infeasible.
    pub fn empty_domain(&self) -> Option<usize> {
        (0..self.num_vars()).find(|&j| self.lower[j] > self.upper[j])
    }

    /// Normalizing an already normalized model is the identity; this returns
    /// a copy rebuilt through [`ModelBuilder`].
    pub fn normalized(&self) -> MipModel {
        self.to_builder()
            .build()
            .expect("a normalized model always rebuilds")
    }

    /// Reconstructs a builder holding this model's normalized rows and the
    /// objective in its original sense.
    pub fn to_builder(&self) -> ModelBuilder {
        let sign = self.objective_sense.sign();
        let mut b = ModelBuilder::new(self.name.clone()).sense(self.objective_sense);
        b.set_objective_name(self.objective_name.clone());
        b.set_offset(sign * self.objective_offset);
        for j in 0..self.num_vars() {
            b.add_named_var(
                self.col_names[j].clone(),
                self.lower[j],
                self.upper[j],
                sign * self.objective[j],
                self.integer[j],
            );
        }
        for (i, row) in self.rows.iter().enumerate() {
            b.rows.push(RowSpec {
                name: self.row_names[i].clone(),
                row: row.clone(),
                sense: RowSense::Le,
                rhs: self.rhs[i],
            });
        }
        b
    }

    /// Copy of the model with replaced variable bounds.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> MipModel {
        assert_eq!(lower.len(), self.num_vars());
        assert_eq!(upper.len(), self.num_vars());
        MipModel {
            lower,
            upper,
            ..self.clone()
        }
    }

    /// Builds a model directly from normalized parts. Used by presolve.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: String,
        objective_sense: ObjSense,
        objective: Vec<f64>,
        objective_offset: f64,
        rows: Vec<SparseRow>,
        rhs: Vec<f64>,
        row_names: Vec<String>,
        col_names: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        integer: Vec<bool>,
    ) -> MipModel {
        let integer_set = (0..integer.len()).filter(|&j| integer[j]).collect();
        let mut model = MipModel {
            name,
            objective_name: "obj".to_string(),
            objective_sense,
            objective,
            objective_offset,
            rows,
            rhs,
            row_names,
            col_names,
            lower,
            upper,
            integer,
            integer_set,
            columns: Vec::new(),
        };
        model.rebuild_columns();
        model
    }

    fn rebuild_columns(&mut self) {
        let mut columns = vec![Vec::new(); self.num_vars()];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter() {
                columns[j].push((i, v));
            }
        }
        self.columns = columns;
    }

    /// Minimization-sense objective including the offset.
    pub fn internal_objective(&self, point: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(point)
            .map(|(c, x)| c * x)
            .sum::<f64>()
            + self.objective_offset
    }

    /// Converts a minimization-sense value to the model's original sense.
    pub fn to_original_sense(&self, internal: f64) -> f64 {
        self.objective_sense.sign() * internal
    }

    pub fn to_internal_sense(&self, original: f64) -> f64 {
        self.objective_sense.sign() * original
    }
}

/// `c^T x` in the model's original sense.
pub fn objective_value(model: &MipModel, point: &[f64]) -> Result<f64, ModelError> {
    if point.len() != model.num_vars() {
        return Err(ModelError::DimensionMismatch {
            expected: model.num_vars(),
            got: point.len(),
        });
    }
    Ok(model.to_original_sense(model.internal_objective(point)))
}

/// Checks rows, bounds and integrality of `point` against `model`.
pub fn check_feasible(
    model: &MipModel,
    point: &[f64],
    tol: &Tolerances,
) -> Result<Feasibility, ModelError> {
    if point.len() != model.num_vars() {
        return Err(ModelError::DimensionMismatch {
            expected: model.num_vars(),
            got: point.len(),
        });
    }
    let violated_row = model
        .rows
        .iter()
        .zip(&model.rhs)
        .position(|(row, &b)| !(row.dot(point) <= b + tol.feas_tol));
    let violated_bound = (0..model.num_vars()).find(|&j| {
        let x = point[j];
        !(x >= model.lower[j] - tol.feas_tol && x <= model.upper[j] + tol.feas_tol)
    });
    let violated_integrality = model
        .integer_set
        .iter()
        .copied()
        .find(|&j| !tol.is_integral(point[j]));
    Ok(Feasibility {
        feasible: violated_row.is_none()
            && violated_bound.is_none()
            && violated_integrality.is_none(),
        violated_row,
        violated_bound,
        violated_integrality,
    })
}

/// A point together with its objective in the model's original sense.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub is_integer_feasible: bool,
}

impl Solution {
    /// Evaluates `values` against `model`, recording integer feasibility.
    pub fn evaluate(model: &MipModel, values: Vec<f64>, tol: &Tolerances) -> Solution {
        let objective = model.to_original_sense(model.internal_objective(&values));
        let is_integer_feasible = check_feasible(model, &values, tol)
            .map(|f| f.feasible)
            .unwrap_or(false);
        Solution {
            values,
            objective,
            is_integer_feasible,
        }
    }
}

impl fmt::Display for MipModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} vars, {} integer, {} rows)",
            self.name,
            self.num_vars(),
            self.integer_set.len(),
            self.num_cons()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MipModel {
        let mut b = ModelBuilder::new("small");
        let x = b.add_var(0.0, 10.0, 1.0, true);
        let y = b.add_var(0.0, 10.0, 2.0, true);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 10.0);
        b.build().unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let m = small();
        let tol = Tolerances::default();
        assert!(check_feasible(&m, &[3.0, 4.0], &tol).unwrap().feasible);
        let r = check_feasible(&m, &[3.5, 4.0], &tol).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violated_integrality, Some(0));
        let r = check_feasible(&m, &[8.0, 4.0], &tol).unwrap();
        assert_eq!(r.violated_row, Some(0));
        assert!(matches!(
            check_feasible(&m, &[1.0], &tol),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn objective_examples() {
        let m = small();
        assert_eq!(objective_value(&m, &[3.0, 4.0]).unwrap(), 11.0);

        let mut b = ModelBuilder::new("zero");
        b.add_var(0.0, 1.0, 0.0, false);
        b.add_var(0.0, 1.0, 0.0, false);
        let z = b.build().unwrap();
        assert_eq!(objective_value(&z, &[0.3, 0.9]).unwrap(), 0.0);

        let mut b = ModelBuilder::new("max").sense(ObjSense::Max);
        b.add_var(0.0, 10.0, 1.0, false);
        let mx = b.build().unwrap();
        assert_eq!(mx.objective(), &[-1.0]);
        assert_eq!(objective_value(&mx, &[5.0]).unwrap(), 5.0);
    }

    #[test]
    fn ge_and_eq_rows_are_normalized() {
        let mut b = ModelBuilder::new("norm");
        let x = b.add_var(0.0, 5.0, 1.0, false);
        b.add_row(&[(x, 2.0)], RowSense::Ge, 1.0);
        b.add_row(&[(x, 1.0)], RowSense::Eq, 3.0);
        let m = b.build().unwrap();
        assert_eq!(m.num_cons(), 3);
        assert_eq!(m.row(0).values, vec![-2.0]);
        assert_eq!(m.rhs(), &[-1.0, 3.0, -3.0]);
        assert_eq!(m.normalized(), m);
    }

    #[test]
    fn empty_domain_is_reported() {
        let mut b = ModelBuilder::new("empty");
        b.add_var(3.0, 1.0, 1.0, true);
        let m = b.build().unwrap();
        assert_eq!(m.empty_domain(), Some(0));
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Tolerances::new(0.0, 1e-6, 1e-9, 1e-6).is_err());
        assert!(Tolerances::new(1e-6, 1e-6, 1e-9, 1e-6).is_ok());
    }
}
