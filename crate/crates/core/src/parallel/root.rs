//! Root processing: LP, separation rounds and root heuristics.

use std::collections::BTreeSet;

use crate::bnb::{RowKey, StoredBasis, TreeNode};
use crate::heuristics::{mix_seed, parallel_root_heuristics};
use crate::lp::{solve_view, LpResult, LpStatus, LpView, VarStatus};
use crate::separation::{parallel_separate_root, CutPool};

use super::{Event, GlobalState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RootOutcome {
    Continue,
    Unbounded,
}

fn root_keys(num_cons: usize, cuts: &CutPool) -> Vec<RowKey> {
    let mut keys: Vec<RowKey> = (0..num_cons).map(RowKey::Model).collect();
    keys.extend(cuts.items().iter().map(|c| RowKey::Cut(c.id())));
    keys
}

fn binding(lp: &LpResult, keys: &[RowKey]) -> BTreeSet<u64> {
    keys.iter()
        .enumerate()
        .filter_map(|(r, k)| match k {
            RowKey::Cut(id)
                if lp.basis.row_status[r] != VarStatus::Basic || lp.slack[r] <= 1e-9 =>
            {
                Some(*id)
            }
            _ => None,
        })
        .collect()
}

/// Solves the root relaxation, adds root cuts to the global pool, runs the
/// root heuristics and pushes the root node.
pub(crate) fn process_root(global: &mut GlobalState) -> RootOutcome {
    let tol = global.config.tol;
    let limit = global.config.root_lp_iter_limit.max(1);
    let k = global.workers;
    let mut iterations = 0u64;
    let mut root = TreeNode::root(-crate::model::INF);
    root.id = global.fresh_id();

    let first = {
        let view = LpView::of_model(&global.model);
        solve_view(&view, global.domain.lower(), global.domain.upper(), None, limit)
    };
    let mut state: Option<(LpResult, Vec<RowKey>)> = None;
    if let Ok(lp) = first {
        iterations += lp.iterations as u64;
        match lp.status {
            LpStatus::Unbounded => return RootOutcome::Unbounded,
            LpStatus::Optimal => {
                let keys = root_keys(global.model.num_cons(), &global.cuts);
                state = Some((lp, keys));
            }
            _ => {}
        }
    }

    if let (Some((lp, keys)), true) = (&mut state, global.config.cuts) {
        for _ in 0..global.config.root_sep_rounds {
            let pool = global.cuts.clone();
            let view = LpView::with_rows(
                &global.model,
                pool.items().iter().map(|c| (&c.coeffs, c.rhs)),
            );
            let cuts = parallel_separate_root(
                &global.model,
                &view,
                &global.domain,
                &global.domain,
                lp,
                &tol,
                &global.config.sep,
                k,
            )
            .unwrap_or_default();
            if global.cuts.add(cuts) == 0 {
                break;
            }
            let new_keys = root_keys(global.model.num_cons(), &global.cuts);
            let view = LpView::with_rows(
                &global.model,
                global.cuts.items().iter().map(|c| (&c.coeffs, c.rhs)),
            );
            let warm = StoredBasis {
                basis: lp.basis.clone(),
                rows: keys.clone(),
            }
            .remap(&new_keys);
            let (lower, upper) = (global.domain.lower(), global.domain.upper());
            let mut next = solve_view(&view, lower, upper, warm.as_ref(), limit);
            if warm.is_some() && next.is_err() {
                next = solve_view(&view, lower, upper, None, limit);
            }
            let Ok(next) = next else { break };
            iterations += next.iterations as u64;
            if next.status != LpStatus::Optimal {
                if next.status == LpStatus::Infeasible {
                    global.domain.mark_infeasible();
                }
                break;
            }
            let gain = next.objective - lp.objective;
            *lp = next;
            *keys = new_keys;
            if gain <= 1e-6 * lp.objective.abs().max(1.0) {
                break;
            }
        }
        global.binding_cuts.extend(binding(lp, keys));
    }

    if let Some((lp, keys)) = &state {
        let bound = lp.objective + global.model.objective_offset();
        global.lower_bound = bound;
        root.lower_bound = bound;
        root.estimate = bound;
        if global.config.heuristics && !global.domain.is_infeasible() {
            let integral = global
                .model
                .integer_set()
                .iter()
                .all(|&j| tol.is_integral(lp.primal[j]));
            if !integral {
                let seeds: Vec<u64> = (0..k as u64)
                    .map(|w| mix_seed(&[global.config.seed, 0, w]))
                    .collect();
                let out = parallel_root_heuristics(
                    &global.model,
                    &global.domain,
                    &lp.primal,
                    k,
                    &seeds,
                    global.config.rounding_trials,
                    global.config.rens_budget,
                    &tol,
                );
                iterations += out.work_units;
                if let Some(sol) = out.solution {
                    global.offer(sol.values, 0);
                }
            }
        }
        root.basis_hint = Some(StoredBasis {
            basis: lp.basis.clone(),
            rows: keys.clone(),
        });
    }
    global.stats.lp_iterations_total += iterations;
    global.event_log.push(Event::Root {
        bound: global.lower_bound,
        cuts: global.cuts.len() as u64,
        lp_iterations: iterations,
    });
    if !global.domain.is_infeasible() {
        global.queue.push(root);
    }
    RootOutcome::Continue
}
