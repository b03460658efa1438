#![allow(dead_code)]

use detmip::instances::{fixtures, random_mip, RandomMipParams};
use detmip::model::{check_feasible, MipModel, Tolerances};

/// Every integer-feasible point of a pure integer model.
pub fn feasible_points(model: &MipModel) -> Vec<Vec<f64>> {
    assert_eq!(model.integer_set().len(), model.num_vars());
    let tol = Tolerances::default();
    let n = model.num_vars();
    let lo: Vec<f64> = model.lower().iter().map(|l| l.ceil()).collect();
    let hi: Vec<f64> = model.upper().iter().map(|u| u.floor()).collect();
    if (0..n).any(|j| lo[j] > hi[j]) {
        return Vec::new();
    }
    let mut x = lo.clone();
    let mut out = Vec::new();
    loop {
        if check_feasible(model, &x, &tol).unwrap().feasible {
            out.push(x.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if x[k] < hi[k] {
                x[k] += 1.0;
                break;
            }
            x[k] = lo[k];
        }
    }
}

/// Pure integer instances small enough to enumerate.
pub fn integer_suite() -> Vec<(String, MipModel)> {
    let params = RandomMipParams {
        max_int_vars: 8,
        max_cont_vars: 0,
        max_span: 5,
        max_rows: 6,
        max_points: 1 << 14,
    };
    let mut out: Vec<(String, MipModel)> = fixtures()
        .into_iter()
        .filter(|(_, m)| m.integer_set().len() == m.num_vars())
        .map(|(n, m)| (n.to_string(), m))
        .collect();
    for seed in 0..40 {
        out.push((format!("rand{seed}"), random_mip(seed, &params)));
    }
    out
}
