//! Test and benchmark instances: a seeded random MIP generator, a set of
//! small handwritten fixtures, and larger knapsack-style instances that need
//! thousands of nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{MipModel, ModelBuilder, ObjSense, RowSense};

/// Shape limits for [`random_mip`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomMipParams {
    pub max_int_vars: usize,
    pub max_cont_vars: usize,
    /// Number of values an integer variable may take.
    pub max_span: i64,
    pub max_rows: usize,
    /// Cap on the number of integer points, so enumeration stays cheap.
    pub max_points: u64,
}

impl Default for RandomMipParams {
    fn default() -> Self {
        Self {
            max_int_vars: 12,
            max_cont_vars: 2,
            max_span: 6,
            max_rows: 10,
            max_points: 1 << 18,
        }
    }
}

/// Random small MIP. Rows are built around a random integer point so most
/// instances are feasible; the objective sense is random.
pub fn random_mip(seed: u64, params: &RandomMipParams) -> MipModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ModelBuilder::new(format!("rand{seed}"));
    if rng.random_bool(0.3) {
        b.set_sense(ObjSense::Max);
    }
    let n_int = rng.random_range(2..=params.max_int_vars.max(2));
    let n_cont = rng.random_range(0..=params.max_cont_vars);
    let mut anchor = Vec::new();
    let mut points: u64 = 1;
    for _ in 0..n_int {
        let lo = rng.random_range(-2..=1) as f64;
        let mut span = rng.random_range(2..=params.max_span.max(2));
        while span > 2 && points * span as u64 > params.max_points {
            span -= 1;
        }
        points = points.saturating_mul(span as u64);
        let hi = lo + (span - 1) as f64;
        let obj = rng.random_range(-10..=10) as f64;
        b.add_var(lo, hi, obj, true);
        anchor.push(rng.random_range(lo as i64..=hi as i64) as f64);
    }
    for _ in 0..n_cont {
        let obj = rng.random_range(-5..=5) as f64 * 0.5;
        b.add_var(0.0, rng.random_range(1..=10) as f64, obj, false);
        anchor.push(0.0);
    }
    let n = n_int + n_cont;
    let rows = rng.random_range(1..=params.max_rows.max(1));
    for _ in 0..rows {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.5) {
                let a = rng.random_range(-6..=9) as f64;
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.random_range(0..n), 1.0));
        }
        let at: f64 = coeffs.iter().map(|&(j, a)| a * anchor[j]).sum();
        let slack = rng.random_range(0..=7) as f64 * 0.5;
        if rng.random_bool(0.75) {
            b.add_row(&coeffs, RowSense::Le, at + slack);
        } else {
            b.add_row(&coeffs, RowSense::Ge, at - slack);
        }
    }
    b.build().expect("generated model is well formed")
}

fn build(name: &str, sense: ObjSense, vars: &[(f64, f64, f64, bool)], rows: &[(&[(usize, f64)], RowSense, f64)]) -> MipModel {
    let mut b = ModelBuilder::new(name).sense(sense);
    for &(l, u, c, int) in vars {
        b.add_var(l, u, c, int);
    }
    for (coeffs, sense, rhs) in rows {
        b.add_row(coeffs, *sense, *rhs);
    }
    b.build().expect("fixture is well formed")
}

/// Small handwritten instances with known structure, all solvable by
/// enumeration.
pub fn fixtures() -> Vec<(&'static str, MipModel)> {
    use ObjSense::{Max, Min};
    use RowSense::{Eq, Ge, Le};
    let bin = |c: f64| (0.0, 1.0, c, true);
    vec![
        (
            "knapsack",
            build(
                "knapsack",
                Max,
                &[bin(10.0), bin(13.0), bin(7.0), bin(8.0), bin(4.0), bin(9.0)],
                &[(&[(0, 5.0), (1, 7.0), (2, 4.0), (3, 5.0), (4, 2.0), (5, 6.0)], Le, 15.0)],
            ),
        ),
        (
            "two_var",
            build(
                "two_var",
                Max,
                &[(0.0, 5.0, 5.0, true), (0.0, 5.0, 4.0, true)],
                &[
                    (&[(0, 6.0), (1, 4.0)], Le, 24.0),
                    (&[(0, 1.0), (1, 2.0)], Le, 6.0),
                ],
            ),
        ),
        (
            "set_cover",
            build(
                "set_cover",
                Min,
                &[bin(3.0), bin(2.0), bin(4.0), bin(2.0), bin(3.0)],
                &[
                    (&[(0, 1.0), (1, 1.0)], Ge, 1.0),
                    (&[(1, 1.0), (2, 1.0)], Ge, 1.0),
                    (&[(2, 1.0), (3, 1.0)], Ge, 1.0),
                    (&[(3, 1.0), (4, 1.0)], Ge, 1.0),
                    (&[(0, 1.0), (4, 1.0)], Ge, 1.0),
                ],
            ),
        ),
        (
            "assignment",
            build(
                "assignment",
                Min,
                &[
                    bin(4.0), bin(2.0), bin(8.0),
                    bin(4.0), bin(3.0), bin(7.0),
                    bin(3.0), bin(1.0), bin(6.0),
                ],
                &[
                    (&[(0, 1.0), (1, 1.0), (2, 1.0)], Eq, 1.0),
                    (&[(3, 1.0), (4, 1.0), (5, 1.0)], Eq, 1.0),
                    (&[(6, 1.0), (7, 1.0), (8, 1.0)], Eq, 1.0),
                    (&[(0, 1.0), (3, 1.0), (6, 1.0)], Eq, 1.0),
                    (&[(1, 1.0), (4, 1.0), (7, 1.0)], Eq, 1.0),
                    (&[(2, 1.0), (5, 1.0), (8, 1.0)], Eq, 1.0),
                ],
            ),
        ),
        (
            "infeasible_parity",
            build(
                "infeasible_parity",
                Min,
                &[(0.0, 5.0, 1.0, true), (0.0, 5.0, 1.0, true)],
                &[(&[(0, 2.0), (1, 2.0)], Eq, 5.0)],
            ),
        ),
        (
            "mixed_continuous",
            build(
                "mixed_continuous",
                Min,
                &[
                    (0.0, 4.0, -3.0, true),
                    (0.0, 4.0, -2.0, true),
                    (0.0, 10.0, -1.0, false),
                ],
                &[
                    (&[(0, 2.0), (1, 2.0), (2, 1.0)], Le, 9.5),
                    (&[(0, 3.0), (1, -1.0)], Le, 4.0),
                    (&[(2, 1.0), (1, -1.0)], Le, 1.5),
                ],
            ),
        ),
        (
            "negative_bounds",
            build(
                "negative_bounds",
                Min,
                &[
                    (-3.0, 2.0, 1.0, true),
                    (-3.0, 2.0, -2.0, true),
                    (-2.0, 3.0, 3.0, true),
                ],
                &[
                    (&[(0, 1.0), (1, 1.0), (2, 1.0)], Ge, -1.5),
                    (&[(0, -2.0), (1, 3.0)], Le, 3.5),
                    (&[(1, 1.0), (2, -1.0)], Le, 0.5),
                ],
            ),
        ),
        (
            "equality_knapsack",
            build(
                "equality_knapsack",
                Min,
                &[
                    (0.0, 5.0, 7.0, true),
                    (0.0, 5.0, 5.0, true),
                    (0.0, 5.0, 4.0, true),
                    (0.0, 5.0, 3.0, true),
                ],
                &[(&[(0, 6.0), (1, 5.0), (2, 4.0), (3, 3.0)], Eq, 19.0)],
            ),
        ),
        (
            "facility",
            build(
                "facility",
                Min,
                &[
                    bin(10.0), bin(12.0),
                    (0.0, 1.0, 2.0, false), (0.0, 1.0, 5.0, false),
                    (0.0, 1.0, 4.0, false), (0.0, 1.0, 1.0, false),
                    (0.0, 1.0, 3.0, false), (0.0, 1.0, 2.0, false),
                ],
                &[
                    (&[(2, 1.0), (3, 1.0)], Eq, 1.0),
                    (&[(4, 1.0), (5, 1.0)], Eq, 1.0),
                    (&[(6, 1.0), (7, 1.0)], Eq, 1.0),
                    (&[(2, 1.0), (0, -1.0)], Le, 0.0),
                    (&[(4, 1.0), (0, -1.0)], Le, 0.0),
                    (&[(6, 1.0), (0, -1.0)], Le, 0.0),
                    (&[(3, 1.0), (1, -1.0)], Le, 0.0),
                    (&[(5, 1.0), (1, -1.0)], Le, 0.0),
                    (&[(7, 1.0), (1, -1.0)], Le, 0.0),
                ],
            ),
        ),
        (
            "multi_knapsack",
            build(
                "multi_knapsack",
                Max,
                &[
                    bin(12.0), bin(11.0), bin(9.0), bin(8.0),
                    bin(7.0), bin(6.0), bin(5.0), bin(4.0),
                ],
                &[
                    (
                        &[(0, 7.0), (1, 6.0), (2, 5.0), (3, 4.0), (4, 4.0), (5, 3.0), (6, 2.0), (7, 2.0)],
                        Le,
                        17.0,
                    ),
                    (
                        &[(0, 3.0), (1, 5.0), (2, 2.0), (3, 6.0), (4, 3.0), (5, 4.0), (6, 3.0), (7, 1.0)],
                        Le,
                        14.0,
                    ),
                ],
            ),
        ),
        (
            "general_integer",
            build(
                "general_integer",
                Max,
                &[
                    (0.0, 5.0, 3.0, true),
                    (0.0, 5.0, 2.0, true),
                    (0.0, 5.0, 4.0, true),
                ],
                &[
                    (&[(0, 3.0), (1, 2.0), (2, 4.0)], Le, 17.5),
                    (&[(0, 1.0), (1, 1.0), (2, -1.0)], Ge, 0.5),
                    (&[(0, 2.0), (2, 3.0)], Le, 13.0),
                ],
            ),
        ),
        (
            "offset_objective",
            {
                let mut b = ModelBuilder::new("offset_objective");
                b.add_var(1.0, 6.0, 2.0, true);
                b.add_var(0.0, 4.0, 3.0, true);
                b.add_row(&[(0, 1.0), (1, 1.0)], RowSense::Ge, 4.5);
                b.add_row(&[(0, 2.0), (1, -1.0)], RowSense::Le, 5.0);
                b.set_offset(10.0);
                b.build().expect("fixture is well formed")
            },
        ),
    ]
}

/// Multi-dimensional knapsack with `n` binaries and `m` rows, capacity half
/// of each row's total weight. Weakly correlated profits make the search
/// tree large even for modest `n`.
pub fn hard_knapsack(seed: u64, n: usize, m: usize) -> MipModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ModelBuilder::new(format!("mknap{seed}_{n}x{m}")).sense(ObjSense::Max);
    let weights: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(10..=60) as f64).collect())
        .collect();
    for j in 0..n {
        let avg: f64 = weights.iter().map(|w| w[j]).sum::<f64>() / m as f64;
        let profit = (avg + rng.random_range(-8..=8) as f64).max(1.0);
        b.add_var(0.0, 1.0, profit, true);
    }
    for w in &weights {
        let coeffs: Vec<(usize, f64)> = w.iter().copied().enumerate().collect();
        let cap = (w.iter().sum::<f64>() / 2.0).floor();
        b.add_row(&coeffs, RowSense::Le, cap);
    }
    b.build().expect("generated model is well formed")
}
