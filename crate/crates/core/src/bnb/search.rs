//! Node evaluation, branching, dives and private-queue selection. Everything
//! here reads and writes a single [`WorkerState`]; cross-worker effects are
//! collected in [`Contributions`] and merged by the engine.

use std::collections::BTreeSet;
use std::time::Duration;

use thiserror::Error;

use crate::balance::{DiveFeatures, DiveParameters};
use crate::conflict::{
    conflict_propagate, conflict_propagate_items, derive_conflict, ConflictConstraint, ConflictPool,
};
use crate::domain::{propagate, BoundChange, Direction, Domain, Reason, DEFAULT_MAX_ROUNDS};
use crate::encode::Encoder;
use crate::heuristics::{mix_seed, randomized_rounding, rins, HeuristicOutcome};
use crate::lp::{solve_view, LpError, LpResult, LpStatus, LpView, VarStatus};
use crate::model::{check_feasible, MipModel, Solution, INF};
use crate::pool::PoolItem;
use crate::separation::{binary_mask, generate_cover, generate_gomory, Cut, CutPool, SepConfig};

use super::node::{BranchDecision, NodeInfo, ParentBranch, RowKey, StoredBasis, TreeNode};
use super::pseudocost::{PcObservation, Pseudocosts};
use super::SolverConfig;

/// Id of a node that has not been queued globally yet.
pub const UNASSIGNED: u64 = u64::MAX;

const PROPAGATION_PASSES: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent {
    /// Point in the (presolved) model's variable space.
    pub values: Vec<f64>,
    /// Minimization-sense objective including the model offset.
    pub objective: f64,
}

/// Everything a worker produced since the last consolidation.
#[derive(Clone, Debug, Default)]
pub struct Contributions {
    /// (nodes evaluated by this worker when found, solution).
    pub incumbents: Vec<(u64, Incumbent)>,
    pub cuts: Vec<Cut>,
    pub conflicts: Vec<ConflictConstraint>,
    pub pc_observations: Vec<PcObservation>,
    /// Global bound changes, replayed in order.
    pub deductions: Vec<BoundChange>,
    pub global_infeasible: bool,
    pub binding_cuts: BTreeSet<u64>,
    pub useful_conflicts: BTreeSet<u64>,
    pub open_nodes: Vec<TreeNode>,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub leaves: u64,
    pub dives: u64,
    pub numerical_failures: u64,
    pub work_units: u64,
}

/// One worker's replica of the solver state plus its private data.
#[derive(Clone, Debug)]
pub struct WorkerState {
    pub index: usize,
    /// Global domain as last broadcast, plus this worker's own deductions.
    pub domain: Domain,
    pub cuts: CutPool,
    pub conflicts: ConflictPool,
    pub pseudocosts: Pseudocosts,
    pub incumbent: Option<Incumbent>,
    pub params: DiveParameters,
    pub lp_iter_limit: usize,
    pub global_lower_bound: f64,
    pub private_queue: Vec<TreeNode>,
    pub local: Contributions,
}

impl WorkerState {
    /// Hash of the replicated read-set (everything broadcast replaces).
    pub fn read_set_hash(&self) -> String {
        let mut enc = Encoder::new();
        self.domain.encode(&mut enc);
        self.cuts.encode(&mut enc);
        self.conflicts.encode(&mut enc);
        self.pseudocosts.encode(&mut enc);
        match &self.incumbent {
            Some(inc) => {
                enc.put_bool(true);
                enc.put_f64s(&inc.values);
                enc.put_f64(inc.objective);
            }
            None => enc.put_bool(false),
        }
        enc.put_usize(self.lp_iter_limit);
        enc.put_f64(self.global_lower_bound);
        enc.digest_hex()
    }

    /// Objective values at or above this are pruned.
    pub fn cutoff(&self, ctx: &SearchContext<'_>) -> f64 {
        let inc = self
            .incumbent
            .as_ref()
            .map_or(INF, |i| i.objective - ctx.config.tol.opt_gap_abs);
        inc.min(ctx.config.cutoff.unwrap_or(INF))
    }

    /// Whether `node` can be discarded without evaluation.
    pub fn prunable(&self, node: &TreeNode, ctx: &SearchContext<'_>) -> bool {
        self.domain.is_infeasible()
            || node.lower_bound >= self.cutoff(ctx)
            || node
                .branch_journal
                .iter()
                .any(|d| d.conflicts_with(&self.domain, &ctx.config.tol))
    }

    /// Accepts `values` as the worker's incumbent if it strictly improves.
    fn offer(&mut self, ctx: &SearchContext<'_>, values: Vec<f64>) -> bool {
        let objective = ctx.model.internal_objective(&values);
        if objective >= self.cutoff(ctx) {
            return false;
        }
        let inc = Incumbent { values, objective };
        self.local.incumbents.push((self.local.nodes, inc.clone()));
        self.incumbent = Some(inc);
        true
    }

    fn offer_heuristic(&mut self, ctx: &SearchContext<'_>, out: HeuristicOutcome) {
        self.local.work_units += out.work_units;
        self.local.lp_iterations += out.work_units;
        if let Some(sol) = out.solution.filter(|s| s.is_integer_feasible) {
            self.offer(ctx, sol.values);
        }
    }

    /// Records a learned conflict and applies it to the worker's global view.
    fn learn(&mut self, ctx: &SearchContext<'_>, conflict: ConflictConstraint) {
        if self.local.conflicts.iter().any(|c| c.duplicates(&conflict)) {
            return;
        }
        let (r, _) =
            conflict_propagate_items(&mut self.domain, std::slice::from_ref(&conflict), &ctx.config.tol);
        if r.infeasible() {
            self.local.global_infeasible = true;
        }
        let journal = self.domain.take_journal();
        self.local.deductions.extend(journal);
        self.local.conflicts.push(conflict);
    }
}

/// Read-only inputs of a search step.
#[derive(Clone, Copy, Debug)]
pub struct SearchContext<'a> {
    pub model: &'a MipModel,
    pub config: &'a SolverConfig,
    pub round: u64,
    /// Nodes a single dive may still evaluate.
    pub node_budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeOutcome {
    PrunedBound,
    PrunedInfeasible,
    IntegerFeasible,
    Fractional,
    Suboptimal,
}

impl NodeOutcome {
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            NodeOutcome::PrunedBound | NodeOutcome::PrunedInfeasible | NodeOutcome::IntegerFeasible
        )
    }
}

#[derive(Clone, Debug)]
pub struct NodeEval {
    pub outcome: NodeOutcome,
    /// Node domain after propagation.
    pub domain: Domain,
    pub lp: Option<LpResult>,
    /// LP objective with offset, or the inherited bound without an LP.
    pub objective: f64,
    pub rows: Vec<RowKey>,
    pub iterations: u64,
}

/// A node chosen at node selection, ready to start a dive.
#[derive(Clone, Debug)]
pub struct SelectedNode {
    pub node: TreeNode,
    pub eval: NodeEval,
    /// Cuts separated at this node, used as extra rows during the dive.
    pub local_cuts: Vec<Cut>,
    pub search_index: u64,
    pub heuristics_allowed: bool,
    pub features: Option<DiveFeatures>,
    pub prediction: f64,
}

#[derive(Clone, Debug)]
pub struct DiveRecord {
    pub worker_index: usize,
    pub start_node: Option<u64>,
    pub contributions: Contributions,
    pub failed: bool,
    /// Work units the dive itself consumed.
    pub dive_work: u64,
    pub features: Option<DiveFeatures>,
    pub prediction: f64,
    /// Completion time within the phase. Reporting only; consolidation
    /// never reads it.
    pub completed_at: Duration,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum BranchError {
    #[error("no fractional integer variable")]
    NoFractional,
}

fn lp_rows<'a>(model: &'a MipModel, cuts: &'a CutPool, local: &'a [Cut]) -> (LpView<'a>, Vec<RowKey>) {
    let view = LpView::with_rows(
        model,
        cuts.items()
            .iter()
            .chain(local)
            .map(|c| (&c.coeffs, c.rhs)),
    );
    let mut keys: Vec<RowKey> = (0..model.num_cons()).map(RowKey::Model).collect();
    keys.extend(cuts.items().iter().map(|c| RowKey::Cut(c.id())));
    keys.extend((0..local.len()).map(RowKey::Local));
    (view, keys)
}

/// Replays the node's branchings on the worker's global view and propagates
/// rows and conflicts. Returns `false` on infeasibility.
fn node_domain(worker: &mut WorkerState, ctx: &SearchContext<'_>, node: &TreeNode) -> (Domain, bool) {
    let tol = &ctx.config.tol;
    let mut d = worker.domain.clone();
    d.clear_journal();
    for dec in &node.branch_journal {
        d.tighten(dec.var, dec.kind, dec.value, Reason::Branch);
    }
    for _ in 0..PROPAGATION_PASSES {
        if d.is_infeasible() {
            return (d, false);
        }
        if propagate(&mut d, ctx.model, tol, DEFAULT_MAX_ROUNDS).infeasible() {
            return (d, false);
        }
        if !ctx.config.conflicts {
            break;
        }
        let (r1, used) = conflict_propagate(&mut d, &worker.conflicts, tol);
        worker.local.useful_conflicts.extend(used);
        if r1.infeasible() {
            return (d, false);
        }
        let (r2, _) = conflict_propagate_items(&mut d, &worker.local.conflicts, tol);
        if r2.infeasible() {
            return (d, false);
        }
        if r1.tightenings == 0 && r2.tightenings == 0 {
            break;
        }
    }
    let ok = !d.is_infeasible();
    (d, ok)
}

fn pruned_infeasible(
    worker: &mut WorkerState,
    ctx: &SearchContext<'_>,
    domain: Domain,
    objective: f64,
    iterations: u64,
) -> NodeEval {
    if ctx.config.conflicts {
        if let Some(c) = derive_conflict(domain.journal()) {
            worker.learn(ctx, c);
        }
    }
    NodeEval {
        outcome: NodeOutcome::PrunedInfeasible,
        domain,
        lp: None,
        objective,
        rows: Vec::new(),
        iterations,
    }
}

fn solve_node_lp(
    worker: &WorkerState,
    ctx: &SearchContext<'_>,
    domain: &Domain,
    hint: Option<&StoredBasis>,
    local_cuts: &[Cut],
    limit: usize,
) -> Result<(LpResult, Vec<RowKey>), LpError> {
    let (view, keys) = lp_rows(ctx.model, &worker.cuts, local_cuts);
    let warm = hint.and_then(|h| h.remap(&keys));
    let mut result = solve_view(&view, domain.lower(), domain.upper(), warm.as_ref(), limit);
    if warm.is_some() && result.is_err() {
        result = solve_view(&view, domain.lower(), domain.upper(), None, limit);
    }
    match result {
        Ok(r) => Ok((r, keys)),
        Err(_) => {
            // Last resort: the bare model rows.
            let view = LpView::of_model(ctx.model);
            let r = solve_view(&view, domain.lower(), domain.upper(), None, limit)?;
            Ok((r, (0..ctx.model.num_cons()).map(RowKey::Model).collect()))
        }
    }
}

/// Classifies a solved node LP. Records binding cuts, incumbents and (when
/// `observe`) the pseudocost observation of the node's branching.
fn classify(
    worker: &mut WorkerState,
    ctx: &SearchContext<'_>,
    node: &TreeNode,
    domain: Domain,
    lp: LpResult,
    rows: Vec<RowKey>,
    iterations: u64,
    observe: bool,
) -> Result<NodeEval, LpError> {
    let model = ctx.model;
    let tol = &ctx.config.tol;
    match lp.status {
        LpStatus::Infeasible => {
            return Ok(pruned_infeasible(worker, ctx, domain, node.lower_bound, iterations));
        }
        LpStatus::Unbounded => return Err(LpError::NumericalFailure),
        LpStatus::IterationLimit => {
            return Ok(NodeEval {
                outcome: NodeOutcome::Suboptimal,
                domain,
                objective: node.lower_bound,
                lp: Some(lp),
                rows,
                iterations,
            });
        }
        LpStatus::Optimal => {}
    }
    let objective = lp.objective + model.objective_offset();
    if observe {
        if let Some(pb) = node.parent_branch {
            if pb.distance > 0.0 {
                let obs = PcObservation {
                    var: pb.var,
                    direction: pb.direction,
                    gain: (objective - pb.parent_objective).max(0.0) / pb.distance,
                };
                worker.pseudocosts.record(&obs);
                worker.local.pc_observations.push(obs);
            }
        }
    }
    for (r, key) in rows.iter().enumerate() {
        if let RowKey::Cut(id) = key {
            if lp.basis.row_status[r] != VarStatus::Basic || lp.slack[r] <= 1e-9 {
                worker.local.binding_cuts.insert(*id);
            }
        }
    }
    let mut eval = NodeEval {
        outcome: NodeOutcome::Fractional,
        domain,
        objective,
        lp: None,
        rows,
        iterations,
    };
    if objective >= worker.cutoff(ctx) {
        eval.outcome = NodeOutcome::PrunedBound;
    } else if model.integer_set().iter().all(|&j| tol.is_integral(lp.primal[j])) {
        eval.outcome = NodeOutcome::IntegerFeasible;
        let mut rounded = lp.primal.clone();
        for &j in model.integer_set() {
            rounded[j] = rounded[j].round();
        }
        let feasible = |p: &[f64]| check_feasible(model, p, tol).map(|f| f.feasible).unwrap_or(false);
        if feasible(&rounded) {
            worker.offer(ctx, rounded);
        } else if feasible(&lp.primal) {
            worker.offer(ctx, lp.primal.clone());
        }
    }
    eval.lp = Some(lp);
    Ok(eval)
}

/// Evaluates `node` against the worker's state: replays its branchings,
/// propagates, and solves the LP (with `local_cuts` as extra rows) under the
/// worker's iteration limit.
pub fn evaluate_node(
    worker: &mut WorkerState,
    ctx: &SearchContext<'_>,
    node: &TreeNode,
    local_cuts: &[Cut],
) -> Result<NodeEval, LpError> {
    worker.local.nodes += 1;
    let (domain, ok) = node_domain(worker, ctx, node);
    if !ok {
        return Ok(pruned_infeasible(worker, ctx, domain, node.lower_bound, 0));
    }
    let limit = worker
        .lp_iter_limit
        .saturating_mul(1usize << node.info.lp_retries.min(20))
        .max(1);
    let (lp, rows) = solve_node_lp(worker, ctx, &domain, node.basis_hint.as_ref(), local_cuts, limit)?;
    let iterations = lp.iterations as u64;
    worker.local.lp_iterations += iterations;
    worker.local.work_units += iterations;
    classify(worker, ctx, node, domain, lp, rows, iterations, true)
}

fn fractional_vars(lp: &LpResult, model: &MipModel, tol: &crate::model::Tolerances) -> Vec<usize> {
    model
        .integer_set()
        .iter()
        .copied()
        .filter(|&j| !tol.is_integral(lp.primal[j]))
        .collect()
}

/// Branching variable and its LP value. Uses the pseudocost product score
/// when every candidate has observations in both directions, otherwise the
/// most fractional candidate. Ties go to the lowest index.
pub fn select_branch_var(
    lp: &LpResult,
    model: &MipModel,
    pseudocosts: &Pseudocosts,
    tol: &crate::model::Tolerances,
) -> Result<(usize, f64), BranchError> {
    let candidates = fractional_vars(lp, model, tol);
    if candidates.is_empty() {
        return Err(BranchError::NoFractional);
    }
    let use_pc = candidates.iter().all(|&j| pseudocosts.initialized(j));
    let mut best = (candidates[0], f64::NEG_INFINITY);
    for &j in &candidates {
        let x = lp.primal[j];
        let f = x - x.floor();
        let score = if use_pc {
            pseudocosts.score(j, f)
        } else {
            f.min(1.0 - f)
        };
        if score > best.1 {
            best = (j, score);
        }
    }
    Ok((best.0, lp.primal[best.0]))
}

/// Down and up children of a fractional node, and the fractional part of
/// the branching value.
fn children(
    worker: &WorkerState,
    ctx: &SearchContext<'_>,
    node: &TreeNode,
    eval: &NodeEval,
    dive_work: u64,
    open_count: usize,
) -> Result<(TreeNode, TreeNode, f64), BranchError> {
    let model = ctx.model;
    let tol = &ctx.config.tol;
    let lp = eval.lp.as_ref().ok_or(BranchError::NoFractional)?;
    let (var, x) = select_branch_var(lp, model, &worker.pseudocosts, tol)?;
    let fractional = fractional_vars(lp, model, tol);
    let lb = eval.objective.max(node.lower_bound);
    let estimate = lb
        + fractional
            .iter()
            .map(|&j| worker.pseudocosts.estimate(j, lp.primal[j] - lp.primal[j].floor()))
            .sum::<f64>();
    let info = NodeInfo {
        has_parent: true,
        eval_iterations: eval.iterations,
        fixed_vars: eval.domain.num_fixed(model.integer_set()),
        fractional_vars: fractional.len(),
        parent_work_units: dive_work,
        parent_open_children: open_count,
        lp_retries: 0,
    };
    let hint = StoredBasis {
        basis: lp.basis.clone(),
        rows: eval.rows.clone(),
    };
    let make = |direction: Direction| {
        let decision = BranchDecision::new(var, direction, x);
        let mut journal = node.branch_journal.clone();
        journal.push(decision);
        let distance = match direction {
            Direction::Down => x - x.floor(),
            Direction::Up => x.ceil() - x,
        };
        TreeNode {
            id: UNASSIGNED,
            parent_id: (node.id != UNASSIGNED).then_some(node.id),
            depth: node.depth + 1,
            lower_bound: lb,
            estimate,
            branch_journal: journal,
            basis_hint: Some(hint.clone()),
            parent_branch: Some(ParentBranch {
                var,
                direction,
                distance,
                parent_objective: lb,
            }),
            info,
        }
    };
    Ok((make(Direction::Down), make(Direction::Up), x - x.floor()))
}

fn requeue(worker: &mut WorkerState, mut node: TreeNode, eval: NodeEval) {
    if let Some(lp) = eval.lp {
        node.basis_hint = Some(StoredBasis {
            basis: lp.basis,
            rows: eval.rows,
        });
    }
    node.info.lp_retries += 1;
    worker.local.open_nodes.push(node);
}

fn dive_heuristics(worker: &mut WorkerState, ctx: &SearchContext<'_>, eval: &NodeEval) {
    let Some(lp) = eval.lp.as_ref() else {
        return;
    };
    let tol = &ctx.config.tol;
    let seed = mix_seed(&[ctx.config.seed, ctx.round, worker.index as u64, worker.local.dives]);
    let out = randomized_rounding(ctx.model, &eval.domain, &lp.primal, seed, ctx.config.rounding_trials, tol);
    worker.offer_heuristic(ctx, out);
    if let Some(inc) = worker.incumbent.clone() {
        let sol = Solution::evaluate(ctx.model, inc.values, tol);
        let out = rins(ctx.model, &worker.domain, &lp.primal, &sol, ctx.config.rins_budget, tol);
        worker.offer_heuristic(ctx, out);
    }
}

/// Dives from a selected fractional node: branch, descend into the child
/// matching the fractional part (up when >= 0.5), keep the sibling on a
/// local stack, and backtrack to the latest sibling after a prune. Stops on
/// a suboptimal LP, at `max_depth` branchings, when the work or node budget
/// is spent, or when no sibling is left. Remaining siblings become open
/// nodes.
pub fn dive(worker: &mut WorkerState, ctx: &SearchContext<'_>, start: SelectedNode) -> DiveRecord {
    let SelectedNode {
        node,
        eval,
        local_cuts,
        heuristics_allowed,
        features,
        prediction,
        ..
    } = start;
    let start_id = (node.id != UNASSIGNED).then_some(node.id);
    let start_work = worker.local.work_units;
    let start_nodes = worker.local.nodes;
    let params = worker.params;
    worker.local.dives += 1;
    if heuristics_allowed && ctx.config.heuristics {
        dive_heuristics(worker, ctx, &eval);
    }
    let mut stack: Vec<TreeNode> = Vec::new();
    let mut steps: u32 = 0;
    let mut failed = false;
    let mut current = Some((node, eval));
    loop {
        let exhausted = |w: &WorkerState| {
            w.local.work_units - start_work >= params.iter_budget
                || w.local.nodes - start_nodes >= ctx.node_budget
        };
        let mut next = None;
        if let Some((node, eval)) = current.take() {
            if eval.objective >= worker.cutoff(ctx) {
                worker.local.leaves += 1;
            } else {
                let dive_work = worker.local.work_units - start_work;
                match children(worker, ctx, &node, &eval, dive_work, stack.len()) {
                    Ok((down, up, f)) => {
                        let (plunge, sibling) = if f >= 0.5 { (up, down) } else { (down, up) };
                        stack.push(sibling);
                        steps += 1;
                        if steps >= params.max_depth || exhausted(worker) {
                            stack.push(plunge);
                            break;
                        }
                        next = Some(plunge);
                    }
                    Err(BranchError::NoFractional) => worker.local.leaves += 1,
                }
            }
        }
        if next.is_none() && exhausted(worker) {
            break;
        }
        let Some(candidate) = next.or_else(|| stack.pop()) else {
            break;
        };
        match evaluate_node(worker, ctx, &candidate, &local_cuts) {
            Err(_) => {
                worker.local.numerical_failures += 1;
                failed = true;
                break;
            }
            Ok(e) => match e.outcome {
                NodeOutcome::Fractional => current = Some((candidate, e)),
                NodeOutcome::Suboptimal => {
                    requeue(worker, candidate, e);
                    break;
                }
                _ => worker.local.leaves += 1,
            },
        }
    }
    worker.local.open_nodes.extend(stack);
    let dive_work = worker.local.work_units - start_work;
    DiveRecord {
        worker_index: worker.index,
        start_node: start_id,
        contributions: std::mem::take(&mut worker.local),
        failed,
        dive_work,
        features,
        prediction,
        completed_at: Duration::ZERO,
    }
}

/// One separation round at a fractional node; re-solves the LP with the new
/// cuts as local rows. Returns the (possibly updated) evaluation and cuts.
fn separate_node(
    worker: &mut WorkerState,
    ctx: &SearchContext<'_>,
    node: &TreeNode,
    eval: NodeEval,
) -> Result<(NodeEval, Vec<Cut>), LpError> {
    let model = ctx.model;
    let tol = &ctx.config.tol;
    let Some(lp) = eval.lp.as_ref() else {
        return Ok((eval, Vec::new()));
    };
    let cfg = SepConfig {
        min_violation: worker.params.cut_violation_threshold,
        max_cuts: ctx.config.node_max_cuts,
        ..ctx.config.sep
    };
    let mut cuts: Vec<Cut> = {
        let (view, _) = lp_rows(model, &worker.cuts, &[]);
        if view.num_rows() != eval.rows.len() {
            return Ok((eval, Vec::new()));
        }
        generate_gomory(lp, &view, model, &eval.domain, &worker.domain, tol, &cfg).unwrap_or_default()
    };
    let binary = binary_mask(model, &worker.domain);
    for i in 0..model.num_cons() {
        if let Some(c) = generate_cover(model.row(i), model.rhs()[i], &lp.primal, &binary, &worker.domain, &cfg) {
            cuts.push(c);
        }
    }
    let mut unique: Vec<Cut> = Vec::new();
    for c in cuts {
        if unique.len() < cfg.max_cuts
            && !unique.iter().any(|u| u.duplicates(&c))
            && !worker.cuts.items().iter().any(|u| u.duplicates(&c))
        {
            unique.push(c);
        }
    }
    if unique.is_empty() {
        return Ok((eval, unique));
    }
    worker.local.cuts.extend(unique.iter().cloned());
    let hint = StoredBasis {
        basis: lp.basis.clone(),
        rows: eval.rows.clone(),
    };
    let limit = worker.lp_iter_limit.max(1);
    let Ok((lp2, rows2)) = solve_node_lp(worker, ctx, &eval.domain, Some(&hint), &unique, limit) else {
        return Ok((eval, Vec::new()));
    };
    let iterations = lp2.iterations as u64;
    worker.local.lp_iterations += iterations;
    worker.local.work_units += iterations;
    if lp2.status == LpStatus::IterationLimit || rows2.len() != eval.rows.len() + unique.len() {
        return Ok((eval, Vec::new()));
    }
    let total = eval.iterations + iterations;
    let new_eval = classify(worker, ctx, node, eval.domain, lp2, rows2, total, false)?;
    Ok((new_eval, unique))
}

/// Walks a private queue in order: discards nodes prunable by the worker's
/// state, evaluates the rest until one is fractional, separates it, and
/// returns it with the unvisited remainder. Suboptimal nodes are deferred
/// to the worker's open nodes.
pub fn select_from_private(
    worker: &mut WorkerState,
    ctx: &SearchContext<'_>,
    queue: Vec<TreeNode>,
) -> (Option<SelectedNode>, Vec<TreeNode>) {
    let mut iter = queue.into_iter();
    while let Some(node) = iter.next() {
        if worker.prunable(&node, ctx) {
            continue;
        }
        let eval = match evaluate_node(worker, ctx, &node, &[]) {
            Ok(e) => e,
            Err(_) => {
                worker.local.numerical_failures += 1;
                continue;
            }
        };
        match eval.outcome {
            NodeOutcome::Suboptimal => requeue(worker, node, eval),
            NodeOutcome::Fractional => {
                let (eval, local_cuts) = if ctx.config.cuts {
                    match separate_node(worker, ctx, &node, eval.clone()) {
                        Ok(pair) => pair,
                        Err(_) => (eval, Vec::new()),
                    }
                } else {
                    (eval, Vec::new())
                };
                if eval.outcome != NodeOutcome::Fractional {
                    worker.local.leaves += 1;
                    continue;
                }
                let selected = SelectedNode {
                    node,
                    eval,
                    local_cuts,
                    search_index: 0,
                    heuristics_allowed: false,
                    features: None,
                    prediction: 0.0,
                };
                return (Some(selected), iter.collect());
            }
            _ => worker.local.leaves += 1,
        }
    }
    (None, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnb::Pseudocosts;
    use crate::lp::Basis;

    fn lp_with(primal: Vec<f64>) -> LpResult {
        let n = primal.len();
        LpResult {
            status: LpStatus::Optimal,
            objective: 0.0,
            slack: Vec::new(),
            basis: Basis {
                var_status: vec![VarStatus::Basic; n],
                row_status: Vec::new(),
                row_basic: Vec::new(),
            },
            primal,
            iterations: 0,
        }
    }

    fn ints(n: usize) -> MipModel {
        let mut b = crate::model::ModelBuilder::new("b");
        for _ in 0..n {
            b.add_var(0.0, 5.0, 1.0, true);
        }
        b.build().unwrap()
    }

    #[test]
    fn most_fractional_without_history() {
        let m = ints(2);
        let tol = crate::model::Tolerances::default();
        let pc = Pseudocosts::new(2);
        assert_eq!(select_branch_var(&lp_with(vec![0.5, 0.1]), &m, &pc, &tol).unwrap().0, 0);
        assert_eq!(select_branch_var(&lp_with(vec![1.5, 2.5]), &m, &pc, &tol).unwrap().0, 0);
        assert_eq!(
            select_branch_var(&lp_with(vec![1.0, 2.0]), &m, &pc, &tol),
            Err(BranchError::NoFractional)
        );
    }

    #[test]
    fn pseudocost_score_when_initialized() {
        let m = ints(2);
        let tol = crate::model::Tolerances::default();
        let mut pc = Pseudocosts::new(2);
        for var in 0..2 {
            for direction in [Direction::Down, Direction::Up] {
                let gain = if var == 1 { 10.0 } else { 1.0 };
                pc.record(&PcObservation { var, direction, gain });
            }
        }
        assert_eq!(select_branch_var(&lp_with(vec![0.5, 0.2]), &m, &pc, &tol).unwrap().0, 1);
    }
}
