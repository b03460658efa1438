mod common;

use common::{feasible_points, integer_suite};
use detmip::conflict::{conflict_propagate, derive_conflict, ConflictPool};
use detmip::domain::{apply_branch, propagate, Direction, Domain, DEFAULT_MAX_ROUNDS};
use detmip::instances::{random_mip, RandomMipParams};
use detmip::lp::{solve_lp, LpStatus, LpView};
use detmip::model::{MipModel, Tolerances};
use detmip::pool::Pool;
use detmip::separation::{binary_mask, generate_cover, generate_gomory, Cut, SepConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_params() -> RandomMipParams {
    RandomMipParams {
        max_int_vars: 7,
        max_cont_vars: 0,
        max_span: 4,
        max_rows: 6,
        max_points: 1 << 12,
    }
}

fn contains(d: &Domain, x: &[f64]) -> bool {
    d.contains(x, 1e-9)
}

/// Cuts at the root and along random branching paths.
fn cuts_for(model: &MipModel, seed: u64) -> Vec<(Cut, Vec<f64>)> {
    let tol = Tolerances::default();
    let cfg = SepConfig::default();
    let mut global = Domain::from_model(model);
    propagate(&mut global, model, &tol, DEFAULT_MAX_ROUNDS);
    if global.is_infeasible() {
        return Vec::new();
    }
    let binary = binary_mask(model, &global);
    let view = LpView::of_model(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _path in 0..6 {
        let mut node = global.clone();
        for _depth in 0..4 {
            let Ok(lp) = solve_lp(model, &node, None, 10_000) else { break };
            if lp.status != LpStatus::Optimal {
                break;
            }
            for cut in generate_gomory(&lp, &view, model, &node, &global, &tol, &cfg).unwrap_or_default() {
                out.push((cut, lp.primal.clone()));
            }
            for (i, row) in model.rows().iter().enumerate() {
                if let Some(cut) = generate_cover(row, model.rhs()[i], &lp.primal, &binary, &global, &cfg) {
                    out.push((cut, lp.primal.clone()));
                }
            }
            let frac: Vec<usize> = model
                .integer_set()
                .iter()
                .copied()
                .filter(|&j| !tol.is_integral(lp.primal[j]))
                .collect();
            if frac.is_empty() {
                break;
            }
            let j = frac[rng.random_range(0..frac.len())];
            let dir = if rng.random_bool(0.5) { Direction::Up } else { Direction::Down };
            apply_branch(&mut node, model, &tol, j, dir, lp.primal[j]).unwrap();
            if propagate(&mut node, model, &tol, DEFAULT_MAX_ROUNDS).infeasible() {
                break;
            }
        }
    }
    out
}

#[test]
fn generated_cuts_are_valid() {
    let tol = Tolerances::default();
    let mut total = 0;
    let mut violations = 0;
    for round in 0..20u64 {
        for (name, model) in integer_suite() {
            let points = feasible_points(&model);
            for (cut, lp_point) in cuts_for(&model, round) {
                total += 1;
                assert!(cut.violation(&lp_point) >= 1e-4 - 1e-12, "{name}: weak cut");
                violations += points
                    .iter()
                    .filter(|x| cut.violation(x) > tol.feas_tol)
                    .count();
            }
        }
        if total >= 1000 {
            break;
        }
    }
    eprintln!("{total} cuts checked");
    assert!(total >= 1000, "only {total} cuts generated");
    assert_eq!(violations, 0);
}

#[test]
fn propagation_keeps_fixture_points() {
    let tol = Tolerances::default();
    for (name, model) in integer_suite() {
        let points = feasible_points(&model);
        let mut d = Domain::from_model(&model);
        let r = propagate(&mut d, &model, &tol, DEFAULT_MAX_ROUNDS);
        if r.infeasible() {
            assert!(points.is_empty(), "{name}");
        }
        for x in &points {
            assert!(contains(&d, x), "{name}: {x:?} excluded");
        }
    }
}

/// Conflicts learned from infeasible random branchings.
fn learn_conflicts(model: &MipModel, seed: u64) -> ConflictPool {
    let tol = Tolerances::default();
    let mut pool: ConflictPool = Pool::new(20, 500);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut root = Domain::from_model(model);
    if propagate(&mut root, model, &tol, DEFAULT_MAX_ROUNDS).infeasible() {
        return pool;
    }
    root.clear_journal();
    for _ in 0..30 {
        let mut d = root.clone();
        for _ in 0..4 {
            let ints = model.integer_set();
            let j = ints[rng.random_range(0..ints.len())];
            let (l, u) = (d.lower()[j], d.upper()[j]);
            if u - l < 1.0 {
                continue;
            }
            let pivot = l + rng.random_range(0..(u - l) as i64) as f64 + 0.5;
            let dir = if rng.random_bool(0.5) { Direction::Up } else { Direction::Down };
            apply_branch(&mut d, model, &tol, j, dir, pivot).unwrap();
            if propagate(&mut d, model, &tol, DEFAULT_MAX_ROUNDS).infeasible() {
                if let Some(c) = derive_conflict(d.journal()) {
                    pool.add([c]);
                }
                break;
            }
        }
    }
    pool
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagation_is_sound(seed in 0u64..1_000_000, branch in 0u64..1000) {
        let tol = Tolerances::default();
        let model = random_mip(seed, &small_params());
        let points = feasible_points(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(branch);
        let mut d = Domain::from_model(&model);
        let j = model.integer_set()[rng.random_range(0..model.integer_set().len())];
        let (l, u) = (d.lower()[j], d.upper()[j]);
        let pivot = l + rng.random_range(0..=((u - l) as i64).max(1) - 1) as f64 + 0.5;
        let dir = if rng.random_bool(0.5) { Direction::Up } else { Direction::Down };
        apply_branch(&mut d, &model, &tol, j, dir, pivot).unwrap();
        let inside: Vec<&Vec<f64>> = points.iter().filter(|x| contains(&d, x)).collect();
        let r = propagate(&mut d, &model, &tol, DEFAULT_MAX_ROUNDS);
        if r.infeasible() {
            prop_assert!(inside.is_empty());
        } else {
            for x in inside {
                prop_assert!(contains(&d, x));
            }
        }
    }

    #[test]
    fn conflicts_are_sound(seed in 0u64..1_000_000) {
        let tol = Tolerances::default();
        let model = random_mip(seed, &small_params());
        let points = feasible_points(&model);
        let pool = learn_conflicts(&model, seed);
        for c in pool.items() {
            for x in &points {
                prop_assert!(c.satisfied_by(x, &tol));
            }
        }
        let mut d = Domain::from_model(&model);
        let (r, _) = conflict_propagate(&mut d, &pool, &tol);
        if r.infeasible() {
            prop_assert!(points.is_empty());
        }
        for x in &points {
            prop_assert!(contains(&d, x));
        }
    }
}

#[test]
fn conflicts_are_learned_and_valid() {
    let tol = Tolerances::default();
    let mut learned = 0;
    for seed in 0..60 {
        let model = random_mip(seed, &small_params());
        let points = feasible_points(&model);
        let pool = learn_conflicts(&model, seed);
        learned += pool.len();
        for c in pool.items() {
            assert!(points.iter().all(|x| c.satisfied_by(x, &tol)), "rand{seed}");
        }
    }
    assert!(learned >= 20, "only {learned} conflicts");
}
