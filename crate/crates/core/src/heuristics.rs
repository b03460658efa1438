//! Primal heuristics: randomized rounding, RENS, RINS, the parallel root
//! scheme, and trivial candidate points.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bnb::{solve_sequential, SolveStatus, SolverConfig};
use crate::domain::{propagate, Domain, Reason};
use crate::lp::{solve_view, LpStatus, LpView};
use crate::model::{check_feasible, MipModel, Solution, Tolerances};
use crate::par::fork_join;

pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_RENS_BUDGET: u64 = 100;
pub const DEFAULT_RINS_BUDGET: u64 = 50;
const REPAIR_ROUNDS: usize = 20;
const REOPT_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeuristicTag {
    Rounding,
    Rens,
    Rins,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOutcome {
    pub found: bool,
    pub solution: Option<Solution>,
    pub heuristic_tag: HeuristicTag,
    pub seed_used: u64,
    /// LP iterations consumed.
    pub work_units: u64,
}

impl HeuristicOutcome {
    fn none(tag: HeuristicTag, seed: u64, work_units: u64) -> Self {
        Self {
            found: false,
            solution: None,
            heuristic_tag: tag,
            seed_used: seed,
            work_units,
        }
    }

    /// Minimization-sense objective of the solution, if any.
    pub fn internal_objective(&self, model: &MipModel) -> Option<f64> {
        self.solution
            .as_ref()
            .map(|s| model.to_internal_sense(s.objective))
    }
}

/// Uniform draw in [0, 1) keyed by (seed, trial, var). The generator is
/// counter based, so the draw does not depend on any earlier draws.
pub fn keyed_uniform(seed: u64, trial: u64, var: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos(2 * var as u128);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Mixes seed material into a decorrelated 64-bit seed (splitmix64 finalizer).
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Completes an assignment whose integer variables are fixed in `domain`:
/// solves the LP over the continuous variables and checks the result.
/// Returns the point (if feasible) and the LP iterations used.
fn complete_point(
    model: &MipModel,
    domain: &Domain,
    ints: &[f64],
    tol: &Tolerances,
) -> (Option<Vec<f64>>, u64) {
    let n = model.num_vars();
    let has_continuous = model.integer_set().len() < n;
    let mut point = ints.to_vec();
    let mut work = 0;
    if has_continuous {
        let mut lower = domain.lower().to_vec();
        let mut upper = domain.upper().to_vec();
        for &j in model.integer_set() {
            lower[j] = ints[j];
            upper[j] = ints[j];
        }
        match solve_view(&LpView::of_model(model), &lower, &upper, None, REOPT_ITERS) {
            Ok(r) => {
                work = r.iterations as u64;
                if r.status != LpStatus::Optimal {
                    return (None, work);
                }
                point = r.primal;
            }
            Err(_) => return (None, work),
        }
    }
    let ok = check_feasible(model, &point, tol).map(|f| f.feasible).unwrap_or(false);
    (ok.then_some(point), work)
}

/// Rounds each fractional integer variable up with probability equal to its
/// fractional part, fixing variables in index order and repairing by
/// propagation after every fixing. The first feasible trial wins.
pub fn randomized_rounding(
    model: &MipModel,
    domain: &Domain,
    lp_point: &[f64],
    seed: u64,
    trials: usize,
    tol: &Tolerances,
) -> HeuristicOutcome {
    let mut work = 0;
    let fractional = model
        .integer_set()
        .iter()
        .any(|&j| !tol.is_integral(lp_point[j]));
    let trials = if fractional { trials } else { trials.min(1) };
    for trial in 0..trials as u64 {
        let mut d = domain.clone();
        d.clear_journal();
        let mut point = lp_point.to_vec();
        let mut ok = !d.is_infeasible();
        for &j in model.integer_set() {
            if !ok {
                break;
            }
            let x = lp_point[j];
            let (lo, hi) = (d.lower()[j], d.upper()[j]);
            let (floor, ceil) = (x.floor(), x.ceil());
            let first = if tol.is_integral(x) {
                x.round()
            } else if keyed_uniform(seed, trial, j) < x - floor {
                ceil
            } else {
                floor
            };
            let second = if first == ceil { floor } else { ceil };
            let value = [first, second]
                .into_iter()
                .find(|v| *v >= lo - tol.feas_tol && *v <= hi + tol.feas_tol);
            let Some(v) = value else {
                ok = false;
                break;
            };
            d.tighten_lower(j, v, Reason::Heuristic);
            d.tighten_upper(j, v, Reason::Heuristic);
            point[j] = v;
            if propagate(&mut d, model, tol, REPAIR_ROUNDS).infeasible() {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let (found, used) = complete_point(model, &d, &point, tol);
        work += used;
        if let Some(x) = found {
            return HeuristicOutcome {
                found: true,
                solution: Some(Solution::evaluate(model, x, tol)),
                heuristic_tag: HeuristicTag::Rounding,
                seed_used: seed,
                work_units: work,
            };
        }
    }
    HeuristicOutcome::none(HeuristicTag::Rounding, seed, work)
}

fn sub_mip_config(node_budget: u64, tol: &Tolerances, cutoff: Option<f64>) -> SolverConfig {
    SolverConfig {
        tol: *tol,
        threads: 1,
        node_limit: Some(node_budget),
        heuristics: false,
        cuts: false,
        cutoff,
        ..SolverConfig::default()
    }
}

/// Solves `model` restricted to `lower`/`upper` as a sub-MIP.
fn solve_sub_mip(
    model: &MipModel,
    lower: Vec<f64>,
    upper: Vec<f64>,
    node_budget: u64,
    tol: &Tolerances,
    cutoff: Option<f64>,
    tag: HeuristicTag,
) -> HeuristicOutcome {
    if node_budget == 0 {
        return HeuristicOutcome::none(tag, 0, 0);
    }
    let sub = model.with_bounds(lower, upper);
    let result = solve_sequential(&sub, &sub_mip_config(node_budget, tol, cutoff));
    let work = result.stats.lp_iterations_total;
    match result.solution {
        Some(sol) if result.status != SolveStatus::Infeasible => {
            let sol = Solution::evaluate(model, sol.values, tol);
            if !sol.is_integer_feasible {
                return HeuristicOutcome::none(tag, 0, work);
            }
            HeuristicOutcome {
                found: true,
                solution: Some(sol),
                heuristic_tag: tag,
                seed_used: 0,
                work_units: work,
            }
        }
        _ => HeuristicOutcome::none(tag, 0, work),
    }
}

/// Restricts every integer variable to the floor/ceil of its LP value (a
/// fixing when the value is integral) and solves the resulting sub-MIP.
pub fn rens(
    model: &MipModel,
    domain: &Domain,
    lp_point: &[f64],
    node_budget: u64,
    tol: &Tolerances,
) -> HeuristicOutcome {
    rens_with_corner(model, domain, lp_point, node_budget, tol, &[])
}

/// RENS where the variables in `corner` are additionally fixed to the given
/// side (`false` floor, `true` ceil).
pub fn rens_with_corner(
    model: &MipModel,
    domain: &Domain,
    lp_point: &[f64],
    node_budget: u64,
    tol: &Tolerances,
    corner: &[(usize, bool)],
) -> HeuristicOutcome {
    let mut lower = domain.lower().to_vec();
    let mut upper = domain.upper().to_vec();
    for &j in model.integer_set() {
        let x = lp_point[j];
        let (lo, hi) = if tol.is_integral(x) {
            (x.round(), x.round())
        } else {
            (x.floor(), x.ceil())
        };
        lower[j] = lower[j].max(lo);
        upper[j] = upper[j].min(hi);
    }
    for &(j, up) in corner {
        let v = if up { lp_point[j].ceil() } else { lp_point[j].floor() };
        lower[j] = lower[j].max(v);
        upper[j] = upper[j].min(v);
    }
    if (0..lower.len()).any(|j| lower[j] > upper[j]) {
        return HeuristicOutcome::none(HeuristicTag::Rens, 0, 0);
    }
    solve_sub_mip(model, lower, upper, node_budget, tol, None, HeuristicTag::Rens)
}

/// Fixes the integer variables on which `incumbent` and `lp_point` agree and
/// searches the rest for a strictly better solution.
pub fn rins(
    model: &MipModel,
    domain: &Domain,
    lp_point: &[f64],
    incumbent: &Solution,
    node_budget: u64,
    tol: &Tolerances,
) -> HeuristicOutcome {
    let mut lower = domain.lower().to_vec();
    let mut upper = domain.upper().to_vec();
    let mut free = 0;
    for &j in model.integer_set() {
        let v = incumbent.values[j];
        if (v - lp_point[j]).abs() <= tol.int_tol {
            let v = v.round();
            lower[j] = lower[j].max(v);
            upper[j] = upper[j].min(v);
        } else {
            free += 1;
        }
    }
    if free == 0 || (0..lower.len()).any(|j| lower[j] > upper[j]) {
        return HeuristicOutcome::none(HeuristicTag::Rins, 0, 0);
    }
    let inc = model.to_internal_sense(incumbent.objective);
    let cutoff = inc - tol.opt_gap_abs.max(1e-9);
    let out = solve_sub_mip(model, lower, upper, node_budget, tol, Some(cutoff), HeuristicTag::Rins);
    match out.internal_objective(model) {
        Some(obj) if obj < inc - 1e-9 => out,
        _ => HeuristicOutcome::none(HeuristicTag::Rins, 0, out.work_units),
    }
}

/// Root heuristics on `worker_count` workers. Worker `k` runs randomized
/// rounding with `seeds[k]` and a RENS shard: with `b = floor(log2 K)`,
/// workers below `2^b` fix the first `b` fractional variables to the corner
/// given by the bits of `k`. The best objective wins; ties go to the lower
/// tag, then the lower worker index.
pub fn parallel_root_heuristics(
    model: &MipModel,
    domain: &Domain,
    lp_point: &[f64],
    worker_count: usize,
    seeds: &[u64],
    trials: usize,
    rens_budget: u64,
    tol: &Tolerances,
) -> HeuristicOutcome {
    let k = worker_count.max(1);
    assert_eq!(seeds.len(), k, "one seed per worker");
    let fractional: Vec<usize> = model
        .integer_set()
        .iter()
        .copied()
        .filter(|&j| !tol.is_integral(lp_point[j]))
        .collect();
    let bits = (usize::BITS - 1 - k.leading_zeros()) as usize;
    let bits = bits.min(fractional.len());
    let per_worker = fork_join(k, |w| {
        let rounding = randomized_rounding(model, domain, lp_point, seeds[w], trials, tol);
        let corner: Vec<(usize, bool)> = if w < (1 << bits) {
            (0..bits).map(|b| (fractional[b], (w >> b) & 1 == 1)).collect()
        } else {
            Vec::new()
        };
        let rens = rens_with_corner(model, domain, lp_point, rens_budget, tol, &corner);
        [rounding, rens]
    });
    merge_outcomes(model, per_worker, seeds)
}

fn merge_outcomes(
    model: &MipModel,
    per_worker: Vec<[HeuristicOutcome; 2]>,
    seeds: &[u64],
) -> HeuristicOutcome {
    let work: u64 = per_worker
        .iter()
        .flat_map(|o| o.iter().map(|h| h.work_units))
        .sum();
    let mut best: Option<(f64, HeuristicTag, usize, HeuristicOutcome)> = None;
    for (w, outcomes) in per_worker.into_iter().enumerate() {
        for o in outcomes {
            let Some(obj) = o.internal_objective(model) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some((bo, bt, bw, _)) => (obj, o.heuristic_tag, w) < (*bo, *bt, *bw),
            };
            if better {
                best = Some((obj, o.heuristic_tag, w, o));
            }
        }
    }
    match best {
        Some((_, _, _, mut o)) => {
            o.work_units = work;
            o
        }
        None => HeuristicOutcome::none(HeuristicTag::Rounding, seeds[0], work),
    }
}

/// The all-lower-bound and all-zero points, when feasible.
pub fn trivial_solutions(model: &MipModel, tol: &Tolerances) -> Vec<Solution> {
    let n = model.num_vars();
    let lower: Vec<f64> = model.lower().to_vec();
    let zero = vec![0.0; n];
    let mut out = Vec::new();
    for point in [lower, zero] {
        if point.iter().all(|v| v.is_finite())
            && check_feasible(model, &point, tol).map(|f| f.feasible).unwrap_or(false)
        {
            out.push(Solution::evaluate(model, point, tol));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, RowSense};

    #[test]
    fn keyed_draws_are_stable() {
        let a = keyed_uniform(7, 3, 11);
        assert_eq!(a, keyed_uniform(7, 3, 11));
        assert_ne!(a, keyed_uniform(7, 4, 11));
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn integral_point_is_accepted() {
        let mut b = ModelBuilder::new("h");
        let x = b.add_var(0.0, 5.0, 1.0, true);
        let y = b.add_var(0.0, 5.0, 1.0, false);
        b.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Ge, 3.5);
        let m = b.build().unwrap();
        let d = Domain::from_model(&m);
        let tol = Tolerances::default();
        let out = randomized_rounding(&m, &d, &[2.0, 1.5], 1, 10, &tol);
        assert!(out.found);
        let s = out.solution.unwrap();
        assert_eq!(s.values[0], 2.0);
        assert!((s.values[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rounding_fails_when_both_sides_are_cut_off() {
        // 2x = 3 forces x = 1.5: neither rounding is feasible.
        let mut b = ModelBuilder::new("h");
        let x = b.add_var(0.0, 5.0, 1.0, true);
        b.add_row(&[(x, 2.0)], RowSense::Eq, 3.0);
        let m = b.build().unwrap();
        let d = Domain::from_model(&m);
        let out = randomized_rounding(&m, &d, &[1.5], 3, 10, &Tolerances::default());
        assert!(!out.found);
    }

    #[test]
    fn rens_budget_zero() {
        let mut b = ModelBuilder::new("h");
        b.add_var(0.0, 5.0, 1.0, true);
        let m = b.build().unwrap();
        let d = Domain::from_model(&m);
        assert!(!rens(&m, &d, &[1.5], 0, &Tolerances::default()).found);
    }
}
