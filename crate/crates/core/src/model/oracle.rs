use crate::lp::{solve_view, LpStatus, LpView};

use super::{check_feasible, MipModel, ModelError, Solution, Tolerances};

/// Outcome of exhaustive enumeration.
#[derive(Clone, Debug, PartialEq)]
pub enum Enumeration {
    Optimal(Solution),
    Infeasible,
    /// The continuous remainder is unbounded for some integer assignment.
    Unbounded,
    TooLarge,
}

impl Enumeration {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Enumeration::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

const ORACLE_LP_ITERS: usize = 100_000;

/// Enumerates every integer assignment within the variable bounds (at most
/// `cap` of them), solving the continuous remainder by LP. Returns the exact
/// optimum; among equal objectives the lexicographically first assignment
/// wins.
pub fn brute_force_optimum(model: &MipModel, cap: u64) -> Result<Enumeration, ModelError> {
    if model.empty_domain().is_some() {
        return Ok(Enumeration::Infeasible);
    }
    let ints = model.integer_set();
    let mut ranges = Vec::with_capacity(ints.len());
    let mut count: u64 = 1;
    for &j in ints {
        let (l, u) = (model.lower()[j], model.upper()[j]);
        if !l.is_finite() || !u.is_finite() {
            return Err(ModelError::UnboundedInteger(j));
        }
        let lo = (l - 1e-9).ceil();
        let hi = (u + 1e-9).floor();
        if lo > hi {
            return Ok(Enumeration::Infeasible);
        }
        let size = (hi - lo) as u64 + 1;
        count = count.saturating_mul(size);
        ranges.push((lo, hi));
    }
    if count > cap {
        return Ok(Enumeration::TooLarge);
    }

    let tol = Tolerances::default();
    let n = model.num_vars();
    let has_continuous = ints.len() < n;
    let view = LpView::of_model(model);
    let mut point: Vec<f64> = (0..n)
        .map(|j| {
            if model.is_integer(j) {
                0.0
            } else {
                finite_anchor(model.lower()[j], model.upper()[j])
            }
        })
        .collect();
    let mut assignment: Vec<f64> = ranges.iter().map(|&(lo, _)| lo).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut unbounded = false;
    // Smallest contribution the continuous variables can make to each row
    // and to the objective.
    let cont_min = |coeffs: &mut dyn Iterator<Item = (usize, f64)>| -> f64 {
        coeffs
            .filter(|&(j, a)| !model.is_integer(j) && a != 0.0)
            .map(|(j, a)| if a > 0.0 { a * model.lower()[j] } else { a * model.upper()[j] })
            .sum()
    };
    let row_floor: Vec<f64> = model.rows().iter().map(|r| cont_min(&mut r.iter())).collect();
    let obj_floor = cont_min(&mut model.objective().iter().copied().enumerate());

    loop {
        for (k, &j) in ints.iter().enumerate() {
            point[j] = assignment[k];
        }
        let hopeless = has_continuous && {
            let int_part = |coeffs: &mut dyn Iterator<Item = (usize, f64)>| -> f64 {
                coeffs
                    .filter(|&(j, _)| model.is_integer(j))
                    .map(|(j, a)| a * point[j])
                    .sum()
            };
            let row_fail = model.rows().iter().enumerate().any(|(i, r)| {
                int_part(&mut r.iter()) + row_floor[i] > model.rhs()[i] + tol.feas_tol
            });
            let bound = int_part(&mut model.objective().iter().copied().enumerate())
                + obj_floor
                + model.objective_offset();
            row_fail || best.as_ref().is_some_and(|(b, _)| bound >= b - 1e-9)
        };
        let candidate = if hopeless {
            None
        } else if has_continuous {
            let mut lower = model.lower().to_vec();
            let mut upper = model.upper().to_vec();
            for &j in ints {
                lower[j] = point[j];
                upper[j] = point[j];
            }
            match solve_view(&view, &lower, &upper, None, ORACLE_LP_ITERS) {
                Ok(r) if r.status == LpStatus::Optimal => Some(r.primal),
                Ok(r) if r.status == LpStatus::Unbounded => {
                    unbounded = true;
                    None
                }
                _ => None,
            }
        } else {
            Some(point.clone())
        };
        if let Some(x) = candidate {
            if check_feasible(model, &x, &tol)?.feasible {
                let obj = model.internal_objective(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < b - 1e-9) {
                    best = Some((obj, x));
                }
            }
        }

        // Odometer increment, last variable fastest.
        let mut k = assignment.len();
        loop {
            if k == 0 {
                if unbounded {
                    return Ok(Enumeration::Unbounded);
                }
                return Ok(match best {
                    Some((_, x)) => Enumeration::Optimal(Solution::evaluate(model, x, &tol)),
                    None => Enumeration::Infeasible,
                });
            }
            k -= 1;
            if assignment[k] < ranges[k].1 {
                assignment[k] += 1.0;
                break;
            }
            assignment[k] = ranges[k].0;
        }
    }
}

fn finite_anchor(l: f64, u: f64) -> f64 {
    if l.is_finite() {
        l
    } else if u.is_finite() {
        u
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, ObjSense, RowSense};

    #[test]
    fn nine_point_enumeration() {
        let mut b = ModelBuilder::new("e").sense(ObjSense::Max);
        let x = b.add_var(0.0, 2.0, 1.0, true);
        let y = b.add_var(0.0, 2.0, 1.0, true);
        b.add_row(&[(x, 1.0), (y, 2.0)], RowSense::Le, 4.0);
        let m = b.build().unwrap();
        let sol = brute_force_optimum(&m, 100).unwrap();
        let sol = sol.solution().unwrap();
        assert_eq!(sol.objective, 3.0);
        assert_eq!(sol.values, vec![2.0, 1.0]);
    }

    #[test]
    fn empty_bounds_infeasible() {
        let mut b = ModelBuilder::new("e");
        b.add_var(2.0, 1.0, 1.0, true);
        let m = b.build().unwrap();
        assert_eq!(brute_force_optimum(&m, 100).unwrap(), Enumeration::Infeasible);
    }

    #[test]
    fn too_large_guard() {
        let mut b = ModelBuilder::new("e");
        for _ in 0..40 {
            b.add_var(0.0, 1.0, 1.0, true);
        }
        let m = b.build().unwrap();
        assert_eq!(brute_force_optimum(&m, 1 << 20).unwrap(), Enumeration::TooLarge);
    }

    #[test]
    fn continuous_remainder_by_lp() {
        let mut b = ModelBuilder::new("e");
        let x = b.add_var(0.0, 3.0, -1.0, true);
        let y = b.add_var(0.0, 10.0, -1.0, false);
        b.add_row(&[(x, 2.0), (y, 1.0)], RowSense::Le, 4.5);
        b.add_row(&[(y, 1.0)], RowSense::Le, 2.0);
        let m = b.build().unwrap();
        let sol = brute_force_optimum(&m, 100).unwrap();
        let sol = sol.solution().unwrap();
        // x=1 gives y=2 (obj -3); x=2 gives y=0.5 (obj -2.5).
        assert!((sol.objective + 3.0).abs() < 1e-9);
    }
}
