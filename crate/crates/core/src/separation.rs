//! Gomory mixed-integer and knapsack cover cuts, the cut pool, and root
//! separation sharded over workers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::encode::Encoder;
use crate::lp::{Factor, LpError, LpResult, LpStatus, LpView, VarStatus};
use crate::model::{MipModel, SparseRow, Tolerances};
use crate::par::fork_join;
use crate::pool::{Pool, PoolItem, PoolMeta};

pub const DEFAULT_CUT_MAX_AGE: u32 = 10;
pub const DEFAULT_CUT_CAPACITY: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CutOrigin {
    Gomory,
    Cover,
}

/// `coeffs . x <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub coeffs: SparseRow,
    pub rhs: f64,
    pub origin: CutOrigin,
    pub meta: PoolMeta,
}

impl Cut {
    pub fn new(coeffs: SparseRow, rhs: f64, origin: CutOrigin) -> Self {
        Self {
            coeffs,
            rhs,
            origin,
            meta: PoolMeta::default(),
        }
    }

    pub fn id(&self) -> u64 {
        self.meta.id
    }

    pub fn age(&self) -> u32 {
        self.meta.age
    }

    pub fn times_binding(&self) -> u32 {
        self.meta.times_used
    }

    pub fn violation(&self, point: &[f64]) -> f64 {
        self.coeffs.dot(point) - self.rhs
    }
}

impl PoolItem for Cut {
    fn meta(&self) -> &PoolMeta {
        &self.meta
    }

    fn meta_mut(&mut self) -> &mut PoolMeta {
        &mut self.meta
    }

    fn duplicates(&self, other: &Self) -> bool {
        self.coeffs.indices == other.coeffs.indices
            && (self.rhs - other.rhs).abs() <= 1e-9
            && self
                .coeffs
                .values
                .iter()
                .zip(&other.coeffs.values)
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_tag(self.origin as u8);
        enc.put_usizes(&self.coeffs.indices);
        enc.put_f64s(&self.coeffs.values);
        enc.put_f64(self.rhs);
    }
}

pub type CutPool = Pool<Cut>;

pub fn new_cut_pool() -> CutPool {
    Pool::new(DEFAULT_CUT_MAX_AGE, DEFAULT_CUT_CAPACITY)
}

/// Adds cuts to the pool; see [`Pool::add`].
pub fn pool_add(pool: &mut CutPool, cuts: Vec<Cut>) -> usize {
    pool.add(cuts)
}

/// Ages the pool; see [`Pool::age`].
pub fn pool_age(pool: &mut CutPool, binding_ids: &BTreeSet<u64>) -> usize {
    pool.age(binding_ids)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SepConfig {
    pub max_cuts: usize,
    pub min_violation: f64,
    pub coef_drop: f64,
    pub max_dynamism: f64,
}

impl Default for SepConfig {
    fn default() -> Self {
        Self {
            max_cuts: 50,
            min_violation: 1e-4,
            coef_drop: 1e-10,
            max_dynamism: 1e8,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SepError {
    #[error("LP result is not optimal")]
    NotOptimal,
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// Turns `coeffs . x <= rhs` into a cleaned cut: drops tiny coefficients
/// (adjusting the right-hand side through the global bounds), relaxes the
/// right-hand side slightly, and rejects numerically poor or unviolated rows.
fn finish_cut(
    pairs: Vec<(usize, f64)>,
    mut rhs: f64,
    origin: CutOrigin,
    global: &Domain,
    point: &[f64],
    cfg: &SepConfig,
) -> Option<Cut> {
    let mut row = SparseRow::from_pairs(pairs);
    let mut ok = true;
    row.retain(|j, a| {
        if a.abs() >= cfg.coef_drop {
            return true;
        }
        let bound = if a > 0.0 { global.lower()[j] } else { global.upper()[j] };
        if bound.is_finite() {
            rhs -= a * bound;
        } else {
            ok = false;
        }
        false
    });
    if !ok || row.is_empty() || !rhs.is_finite() {
        return None;
    }
    let (mut amin, mut amax) = (f64::INFINITY, 0.0f64);
    for &a in &row.values {
        amin = amin.min(a.abs());
        amax = amax.max(a.abs());
    }
    if amax / amin > cfg.max_dynamism {
        return None;
    }
    rhs += 1e-9 * rhs.abs().max(1.0);
    let cut = Cut::new(row, rhs, origin);
    (cut.violation(point) >= cfg.min_violation).then_some(cut)
}

/// Gomory mixed-integer cut from the tableau row whose basic variable is
/// `var`. Returns `None` when the row does not yield a globally valid,
/// sufficiently violated cut.
#[allow(clippy::too_many_arguments)]
pub fn gomory_from_row(
    factor: &Factor,
    lp: &LpResult,
    view: &LpView<'_>,
    model: &MipModel,
    node: &Domain,
    global: &Domain,
    var: usize,
    cfg: &SepConfig,
) -> Option<Cut> {
    let row = factor.tableau_row(var)?;
    let n = view.num_vars();
    let xk = lp.primal[var];
    let f0 = frac(xk);
    if !(0.005..=0.995).contains(&f0) {
        return None;
    }
    // In the shifted space x_k + sum a_j t_j = x_k*, t_j >= 0.
    let mut sum: Vec<(usize, f64)> = Vec::new();
    let mut rhs_ge = 1.0;
    let mut dense = vec![0.0; n];
    for (j, &t) in row.coeffs.iter().enumerate() {
        if j == var || t.abs() < 1e-12 {
            continue;
        }
        let status = lp.basis.status(j);
        let (a, at_upper) = match status {
            VarStatus::Basic => continue,
            VarStatus::AtLower => (t, false),
            VarStatus::AtUpper => (-t, true),
            VarStatus::FreeNonbasic => return None,
        };
        let integral = j < n && model.is_integer(j);
        let g = if integral {
            let fj = frac(a);
            if fj <= f0 {
                fj / f0
            } else {
                (1.0 - fj) / (1.0 - f0)
            }
        } else if a >= 0.0 {
            a / f0
        } else {
            -a / (1.0 - f0)
        };
        if g == 0.0 {
            continue;
        }
        if j < n {
            // Structural: the bound it sits at must be the global one.
            let (bound, glob) = if at_upper {
                (node.upper()[j], global.upper()[j])
            } else {
                (node.lower()[j], global.lower()[j])
            };
            if bound != glob || !bound.is_finite() {
                return None;
            }
            // t_j = x_j - l_j or u_j - x_j.
            if at_upper {
                dense[j] -= g;
                rhs_ge -= g * bound;
            } else {
                dense[j] += g;
                rhs_ge += g * bound;
            }
        } else {
            // Slack t = b_i - a_i x.
            let i = j - n;
            rhs_ge -= g * view.rhs()[i];
            for (c, v) in view.row(i).iter() {
                dense[c] -= g * v;
            }
        }
        sum.push((j, g));
    }
    if sum.is_empty() {
        return None;
    }
    // dense . x >= rhs_ge  <=>  -dense . x <= -rhs_ge
    let pairs = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, -v))
        .collect();
    finish_cut(pairs, -rhs_ge, CutOrigin::Gomory, global, &lp.primal, cfg)
}

/// Fractional integer basic variables in ascending index order.
pub fn fractional_basics(lp: &LpResult, model: &MipModel, tol: &Tolerances) -> Vec<usize> {
    model
        .integer_set()
        .iter()
        .copied()
        .filter(|&j| lp.basis.var_status[j] == VarStatus::Basic && !tol.is_integral(lp.primal[j]))
        .collect()
}

/// Gomory mixed-integer cuts for the fractional integer basic variables of
/// `lp`, at most `cfg.max_cuts`.
pub fn generate_gomory(
    lp: &LpResult,
    view: &LpView<'_>,
    model: &MipModel,
    node: &Domain,
    global: &Domain,
    tol: &Tolerances,
    cfg: &SepConfig,
) -> Result<Vec<Cut>, SepError> {
    if lp.status != LpStatus::Optimal {
        return Err(SepError::NotOptimal);
    }
    let candidates = fractional_basics(lp, model, tol);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let factor = Factor::from_basis(view, &lp.basis)?;
    Ok(candidates
        .into_iter()
        .filter_map(|var| gomory_from_row(&factor, lp, view, model, node, global, var, cfg))
        .take(cfg.max_cuts)
        .collect())
}

/// Cover cut from the `<=` row `row . x <= rhs`. Binary variables with
/// negative coefficients are complemented; other variables are relaxed out
/// through their global bounds.
pub fn generate_cover(
    row: &SparseRow,
    rhs: f64,
    lp_point: &[f64],
    binary: &[bool],
    global: &Domain,
    cfg: &SepConfig,
) -> Option<Cut> {
    let mut b = rhs;
    // (var, weight, complemented, y*)
    let mut items: Vec<(usize, f64, bool, f64)> = Vec::new();
    for (j, a) in row.iter() {
        if binary[j] {
            if a > 0.0 {
                items.push((j, a, false, lp_point[j]));
            } else {
                b -= a;
                items.push((j, -a, true, 1.0 - lp_point[j]));
            }
        } else {
            let bound = if a > 0.0 { global.lower()[j] } else { global.upper()[j] };
            if !bound.is_finite() {
                return None;
            }
            b -= a * bound;
        }
    }
    if items.len() < 2 || b < 0.0 {
        return None;
    }
    items.sort_by(|x, y| y.3.total_cmp(&x.3).then(x.0.cmp(&y.0)));
    let mut cover = Vec::new();
    let mut weight = 0.0;
    for item in &items {
        if weight > b + 1e-9 {
            break;
        }
        cover.push(*item);
        weight += item.1;
    }
    if weight <= b + 1e-9 {
        return None;
    }
    // Minimalize, trying the least attractive members first.
    let mut k = cover.len();
    while k > 0 {
        k -= 1;
        if weight - cover[k].1 > b + 1e-9 {
            weight -= cover[k].1;
            cover.remove(k);
        }
    }
    // sum y_j <= |C| - 1 with y_j = x_j or 1 - x_j.
    let mut rhs_cut = cover.len() as f64 - 1.0;
    let mut pairs = Vec::with_capacity(cover.len());
    for &(j, _, complemented, _) in &cover {
        if complemented {
            pairs.push((j, -1.0));
            rhs_cut -= 1.0;
        } else {
            pairs.push((j, 1.0));
        }
    }
    let cut = Cut::new(SparseRow::from_pairs(pairs), rhs_cut, CutOrigin::Cover);
    (cut.violation(lp_point) >= cfg.min_violation).then_some(cut)
}

/// Global binary mask: integer variables with global bounds inside [0, 1].
pub fn binary_mask(model: &MipModel, global: &Domain) -> Vec<bool> {
    (0..model.num_vars())
        .map(|j| model.is_integer(j) && global.lower()[j] >= 0.0 && global.upper()[j] <= 1.0)
        .collect()
}

/// One separation task: a Gomory row for a fractional variable or a cover
/// for a model row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SepTask {
    Gomory(usize),
    Cover(usize),
}

pub fn separation_tasks(lp: &LpResult, model: &MipModel, tol: &Tolerances) -> Vec<SepTask> {
    let fractional = fractional_basics(lp, model, tol);
    if fractional.is_empty() {
        return Vec::new();
    }
    fractional
        .into_iter()
        .map(SepTask::Gomory)
        .chain((0..model.num_cons()).map(SepTask::Cover))
        .collect()
}

/// Runs every separation task, sharded by task index modulo `worker_count`
/// across threads. Results are merged in task order, so the output does not
/// depend on `worker_count` or on thread timing. At most `cfg.max_cuts` cuts
/// are returned; the list is deduplicated.
#[allow(clippy::too_many_arguments)]
pub fn parallel_separate_root(
    model: &MipModel,
    view: &LpView<'_>,
    node: &Domain,
    global: &Domain,
    lp: &LpResult,
    tol: &Tolerances,
    cfg: &SepConfig,
    worker_count: usize,
) -> Result<Vec<Cut>, SepError> {
    if lp.status != LpStatus::Optimal {
        return Err(SepError::NotOptimal);
    }
    let tasks = separation_tasks(lp, model, tol);
    if tasks.is_empty() {
        return Ok(Vec::new());
    }
    let factor = Factor::from_basis(view, &lp.basis)?;
    let binary = binary_mask(model, global);
    let k = worker_count.max(1);
    let run = |task: SepTask| match task {
        SepTask::Gomory(var) => gomory_from_row(&factor, lp, view, model, node, global, var, cfg),
        SepTask::Cover(i) => {
            generate_cover(model.row(i), model.rhs()[i], &lp.primal, &binary, global, cfg)
        }
    };
    let shards: Vec<Vec<(usize, Option<Cut>)>> = fork_join(k, |shard| {
        tasks
            .iter()
            .enumerate()
            .filter(|(t, _)| t % k == shard)
            .map(|(t, task)| (t, run(*task)))
            .collect()
    });
    let mut by_task: Vec<Option<Cut>> = vec![None; tasks.len()];
    for shard in shards {
        for (t, cut) in shard {
            by_task[t] = cut;
        }
    }
    let mut out: Vec<Cut> = Vec::new();
    for cut in by_task.into_iter().flatten() {
        if out.len() >= cfg.max_cuts {
            break;
        }
        if !out.iter().any(|c| c.duplicates(&cut)) {
            out.push(cut);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(j: usize, rhs: f64) -> Cut {
        Cut::new(SparseRow::from_pairs([(j, 1.0)]), rhs, CutOrigin::Cover)
    }

    #[test]
    fn cover_example() {
        let row = SparseRow::from_pairs([(0, 3.0), (1, 3.0), (2, 3.0)]);
        let global = Domain::new(vec![0.0; 3], vec![1.0; 3]);
        let cfg = SepConfig::default();
        let bin = vec![true; 3];
        let c = generate_cover(&row, 5.0, &[0.9, 0.9, 0.0], &bin, &global, &cfg).unwrap();
        assert_eq!(c.coeffs.indices, vec![0, 1]);
        assert_eq!(c.rhs, 1.0);
        assert!((c.violation(&[0.9, 0.9, 0.0]) - 0.8).abs() < 1e-12);
        assert!(generate_cover(&row, 5.0, &[0.0; 3], &bin, &global, &cfg).is_none());
        let neg = SparseRow::from_pairs([(0, -3.0), (1, -3.0), (2, -3.0)]);
        assert!(generate_cover(&neg, 5.0, &[0.5; 3], &bin, &global, &cfg).is_none());
    }

    #[test]
    fn pool_add_dedup_and_eviction() {
        let mut pool = new_cut_pool();
        assert_eq!(pool_add(&mut pool, vec![cut(0, 1.0), cut(1, 1.0)]), 2);
        let ids: Vec<u64> = pool.items().iter().map(|c| c.id()).collect();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(pool_add(&mut pool, vec![cut(0, 1.0)]), 0);

        let mut small = Pool::new(DEFAULT_CUT_MAX_AGE, 1);
        assert_eq!(pool_add(&mut small, vec![cut(0, 1.0), cut(1, 1.0)]), 2);
        assert_eq!(small.len(), 1);
        assert_eq!(small.items()[0].id(), 0);
    }

    #[test]
    fn pool_aging() {
        let mut pool = Pool::new(2, 10);
        pool_add(&mut pool, vec![cut(0, 1.0)]);
        let none = BTreeSet::new();
        assert_eq!(pool_age(&mut pool, &none), 0);
        assert_eq!(pool_age(&mut pool, &none), 0);
        assert_eq!(pool_age(&mut pool, &none), 1);

        let mut pool = Pool::new(2, 10);
        pool_add(&mut pool, vec![cut(0, 1.0)]);
        let used = BTreeSet::from([0]);
        for _ in 0..10 {
            assert_eq!(pool_age(&mut pool, &used), 0);
        }
        assert_eq!(pool.items()[0].times_binding(), 10);
        assert_eq!(pool_age(&mut new_cut_pool(), &none), 0);
    }
}
