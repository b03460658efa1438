//! Deterministic data-parallel branch-and-bound.
//!
//! The master keeps a [`GlobalState`]; every worker holds a full replica in a
//! [`WorkerState`]. A round runs barrier-separated phases: concurrent dives,
//! consolidation of the per-worker records in worker-index order, global
//! synchronization, broadcast of the global read-set, and node selection
//! (concurrent evaluation of private queues, then a serial fallback). Workers
//! never share mutable state inside a phase and every merge is keyed by slot,
//! so the run is a pure function of the model and configuration. Clocks feed
//! [`ThreadStats`] and the global time limit only.

mod events;
mod root;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::balance::{
    adjust_parameters, assign_nodes, detect_critical, extract_features, predict, record_outcome,
    DiveParameters, WorkloadModel,
};
use crate::bnb::{
    check_restart, dive, presolve, select_from_private, Contributions, DiveRecord, Incumbent,
    NodeQueue, PostsolveMap, PresolveOutcome, Pseudocosts, RestartProgress, SearchContext,
    SelectedNode, SelectionPolicy, SolveResult, SolveStatus, SolverConfig, SolverStats, TreeNode,
    WorkerState, UNASSIGNED,
};
use crate::conflict::{conflict_propagate, ConflictPool};
use crate::domain::{prune_queue, propagate, Domain, Reason, DEFAULT_MAX_ROUNDS};
use crate::encode::Encoder;
use crate::model::{MipModel, Solution, INF};
use crate::par::fork_join_timed;
use crate::pool::Pool;
use crate::separation::CutPool;

pub use events::{first_divergence, Event, EventLog, RoundRecord, ThreadStats, EVENT_LOG_MAGIC};

static SALT: AtomicU64 = AtomicU64::new(1);

/// Master-side solver state.
#[derive(Clone, Debug)]
pub struct GlobalState {
    pub model: MipModel,
    pub config: SolverConfig,
    pub workers: usize,
    pub queue: NodeQueue,
    pub domain: Domain,
    pub cuts: CutPool,
    pub conflicts: ConflictPool,
    pub pseudocosts: Pseudocosts,
    pub incumbent: Option<Incumbent>,
    pub lower_bound: f64,
    pub round: u64,
    pub next_node_id: u64,
    pub dive_counter: u64,
    pub stats: SolverStats,
    /// Cuts binding / conflicts propagating since the last aging.
    pub binding_cuts: BTreeSet<u64>,
    pub useful_conflicts: BTreeSet<u64>,
    pub params: Vec<DiveParameters>,
    pub lp_iter_limit: usize,
    pub balancer: WorkloadModel,
    pub round_work: Vec<u64>,
    pub round_dives: Vec<u64>,
    pub round_dived: Vec<Option<u64>>,
    pub last_round_work: Vec<u64>,
    /// Dives completed in the last synchronized round.
    pub last_round_dives: u64,
    pub worker_work: Vec<u64>,
    pub worker_dives: Vec<u64>,
    pub restart_fixed_base: usize,
    pub restart_nodes_base: u64,
    pub event_log: EventLog,
}

impl GlobalState {
    pub fn new(model: MipModel, config: SolverConfig, workers: usize) -> Self {
        let k = workers.max(1);
        let mut domain = Domain::from_model(&model);
        propagate(&mut domain, &model, &config.tol, DEFAULT_MAX_ROUNDS);
        domain.clear_journal();
        let n = model.num_vars();
        let restart_fixed_base = domain.num_fixed(model.integer_set());
        Self {
            queue: NodeQueue::new(),
            cuts: Pool::new(config.cut_max_age, config.cut_capacity),
            conflicts: Pool::new(config.conflict_max_age, config.conflict_capacity),
            pseudocosts: Pseudocosts::new(n),
            incumbent: None,
            lower_bound: -INF,
            round: 0,
            next_node_id: 0,
            dive_counter: 0,
            stats: SolverStats::default(),
            binding_cuts: BTreeSet::new(),
            useful_conflicts: BTreeSet::new(),
            params: vec![config.dive; k],
            lp_iter_limit: config.min_lp_iter_limit.max(1),
            balancer: WorkloadModel::new(config.balancer),
            round_work: vec![0; k],
            round_dives: vec![0; k],
            round_dived: vec![None; k],
            last_round_work: vec![0; k],
            last_round_dives: 0,
            worker_work: vec![0; k],
            worker_dives: vec![0; k],
            restart_fixed_base,
            restart_nodes_base: 0,
            event_log: EventLog::new(),
            workers: k,
            domain,
            model,
            config,
        }
    }

    pub fn incumbent_objective(&self) -> f64 {
        self.incumbent.as_ref().map_or(INF, |i| i.objective)
    }

    fn prune_value(&self) -> f64 {
        self.incumbent_objective()
            .min(self.config.cutoff.unwrap_or(INF))
    }

    /// Best-bound, switching to best-estimate once the gap is small.
    pub fn policy(&self) -> SelectionPolicy {
        match &self.incumbent {
            Some(inc)
                if inc.objective - self.lower_bound
                    < 10.0 * self.config.tol.opt_gap_rel * inc.objective.abs() =>
            {
                SelectionPolicy::BestEstimate
            }
            _ => SelectionPolicy::BestBound,
        }
    }

    fn context(&self) -> SearchContext<'_> {
        let node_budget = match self.config.node_limit {
            Some(limit) => limit.saturating_sub(self.stats.nodes_explored).max(1),
            None => u64::MAX,
        };
        SearchContext {
            model: &self.model,
            config: &self.config,
            round: self.round,
            node_budget,
        }
    }

    /// Offers a solution found by the master (trivial or root heuristics).
    fn offer(&mut self, values: Vec<f64>, worker: usize) {
        let objective = self.model.internal_objective(&values);
        if objective >= self.prune_value() - self.config.tol.opt_gap_abs {
            return;
        }
        self.accept(Incumbent { values, objective }, self.stats.nodes_explored, worker);
    }

    fn accept(&mut self, inc: Incumbent, nodes: u64, worker: usize) {
        let original = self.model.to_original_sense(inc.objective);
        self.stats.incumbent_history.push((nodes, original));
        self.event_log.push(Event::Incumbent {
            nodes,
            worker: worker as u64,
            objective: original,
        });
        self.incumbent = Some(inc);
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_node_id;
        self.next_node_id += 1;
        id
    }

    /// Canonical hash of the deterministic state.
    pub fn hash(&self) -> String {
        let mut enc = Encoder::new();
        enc.put_usize(self.queue.len());
        for node in self.queue.iter() {
            node.encode(&mut enc);
        }
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
        enc.put_f64(self.lower_bound);
        enc.put_u64(self.round);
        enc.put_u64(self.next_node_id);
        enc.put_u64(self.dive_counter);
        enc.put_u64(self.stats.nodes_explored);
        enc.put_u64(self.stats.lp_iterations_total);
        enc.put_u64(self.stats.leaves);
        enc.put_u64(self.stats.dives);
        for (n, obj) in &self.stats.incumbent_history {
            enc.put_u64(*n);
            enc.put_f64(*obj);
        }
        for id in self.binding_cuts.iter().chain(&self.useful_conflicts) {
            enc.put_u64(*id);
        }
        for p in &self.params {
            enc.put_u64(p.iter_budget);
            enc.put_u64(p.max_depth as u64);
            enc.put_f64(p.cut_violation_threshold);
        }
        enc.put_usize(self.lp_iter_limit);
        enc.put_usize(self.balancer.training_buffer.len());
        enc.put_u64(self.balancer.retrain_count);
        for w in self.round_work.iter().chain(&self.worker_work) {
            enc.put_u64(*w);
        }
        for b in self.event_log.hash().bytes() {
            enc.put_tag(b);
        }
        enc.digest_hex()
    }
}

/// Builds the replica of `global` for worker `index`.
fn replica(global: &GlobalState, index: usize) -> WorkerState {
    let mut domain = global.domain.clone();
    domain.clear_journal();
    WorkerState {
        index,
        domain,
        cuts: global.cuts.truncated(global.config.broadcast_limit),
        conflicts: global.conflicts.truncated(global.config.broadcast_limit),
        pseudocosts: global.pseudocosts.clone(),
        incumbent: global.incumbent.clone(),
        params: global.params[index],
        lp_iter_limit: global.lp_iter_limit,
        global_lower_bound: global.lower_bound,
        private_queue: Vec::new(),
        local: Contributions::default(),
    }
}

/// `k` independent replicas of the global state.
pub fn replicate(global: &GlobalState, k: usize) -> Vec<WorkerState> {
    assert!(k >= 1 && k <= global.params.len(), "worker count out of range");
    (0..k).map(|w| replica(global, w)).collect()
}

/// Replaces every worker's read-set with the global version. Pools are
/// truncated to the `broadcast_limit` most recent entries.
pub fn broadcast(global: &GlobalState, workers: &mut [WorkerState]) {
    for (w, worker) in workers.iter_mut().enumerate() {
        *worker = replica(global, w);
    }
}

fn merge_contributions(global: &mut GlobalState, w: usize, c: Contributions) {
    let gap = global.config.tol.opt_gap_abs;
    let base = global.stats.nodes_explored;
    for (seq, inc) in c.incumbents {
        if inc.objective < global.incumbent_objective() - gap {
            global.accept(inc, base + seq, w);
        }
    }
    global.stats.nodes_explored += c.nodes;
    global.stats.lp_iterations_total += c.lp_iterations;
    global.stats.leaves += c.leaves;
    global.stats.dives += c.dives;
    global.stats.numerical_failures += c.numerical_failures;
    for mut node in c.open_nodes {
        if node.id == UNASSIGNED {
            node.id = global.fresh_id();
        }
        global.queue.push(node);
    }
    global.cuts.add(c.cuts);
    global.conflicts.add(c.conflicts);
    for obs in &c.pc_observations {
        global.pseudocosts.record(obs);
    }
    for ch in &c.deductions {
        global.domain.tighten(ch.var, ch.kind, ch.new, Reason::Global);
    }
    if c.global_infeasible {
        global.domain.mark_infeasible();
    }
    global.binding_cuts.extend(c.binding_cuts);
    global.useful_conflicts.extend(c.useful_conflicts);
    global.round_work[w] += c.work_units;
    global.round_dives[w] += c.dives;
    global.worker_work[w] += c.work_units;
    global.worker_dives[w] += c.dives;
}

/// Merges dive records into the global state in worker-index order. The
/// record's position is its worker slot; completion times are ignored.
pub fn consolidate(global: &mut GlobalState, records: Vec<DiveRecord>) {
    for (slot, rec) in records.into_iter().enumerate() {
        debug_assert_eq!(rec.worker_index, slot);
        if rec.start_node.is_some() {
            global.round_dived[slot] = rec.start_node;
        }
        if let (Some(f), true) = (rec.features, global.config.balancer.enabled) {
            record_outcome(&mut global.balancer, &f, rec.prediction, rec.dive_work as f64);
        }
        merge_contributions(global, slot, rec.contributions);
    }
}

/// Runs the dives of all workers holding a selected node, behind a barrier.
/// Returns the records by worker slot with each slot's busy time, and the
/// phase wall time.
pub fn parallel_dive_phase(
    global: &GlobalState,
    workers: &mut [WorkerState],
    selected: Vec<Option<SelectedNode>>,
) -> (Vec<DiveRecord>, Vec<Duration>, Duration) {
    let ctx = global.context();
    let inputs: Vec<_> = workers.iter_mut().zip(selected).collect();
    let (mut records, busy, wall) = fork_join_timed(inputs, |w, (worker, sel)| match sel {
        Some(s) => dive(worker, &ctx, s),
        None => DiveRecord {
            worker_index: w,
            start_node: None,
            contributions: std::mem::take(&mut worker.local),
            failed: false,
            dive_work: 0,
            features: None,
            prediction: 0.0,
            completed_at: Duration::ZERO,
        },
    });
    for (rec, b) in records.iter_mut().zip(&busy) {
        rec.completed_at = *b;
    }
    (records, busy, wall)
}

fn propagate_global(global: &mut GlobalState) {
    let tol = global.config.tol;
    for _ in 0..10 {
        if global.domain.is_infeasible() {
            break;
        }
        let r = propagate(&mut global.domain, &global.model, &tol, DEFAULT_MAX_ROUNDS);
        let mut tightened = r.tightenings;
        if global.config.conflicts && !r.infeasible() {
            let (rc, used) = conflict_propagate(&mut global.domain, &global.conflicts, &tol);
            global.useful_conflicts.extend(used);
            tightened += rc.tightenings;
        }
        if tightened == 0 {
            break;
        }
    }
    global.domain.clear_journal();
}

/// Propagates the global domain, prunes the queue, updates the bound and
/// evaluates termination and restart. Appends the round record.
pub fn global_sync(global: &mut GlobalState, elapsed: Duration) -> Option<SolveStatus> {
    let tol = global.config.tol;
    propagate_global(global);
    if global.domain.is_infeasible() {
        global.queue.clear();
    }
    let prune_value = global.prune_value();
    prune_queue(&mut global.queue, &global.domain, prune_value, &tol);
    let inc = global.incumbent_objective();
    let lb = global.queue.min_lower_bound().unwrap_or(inc).min(inc);
    global.lower_bound = global.lower_bound.max(lb);

    let mut status = if global.queue.is_empty() {
        Some(if global.incumbent.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        })
    } else if global.incumbent.is_some() && inc - global.lower_bound <= tol.gap_limit(inc) {
        Some(SolveStatus::Optimal)
    } else {
        None
    };
    if status.is_none() {
        let node_hit = global
            .config
            .node_limit
            .is_some_and(|l| global.stats.nodes_explored >= l);
        let time_hit = global
            .config
            .time_limit
            .is_some_and(|t| elapsed.as_secs_f64() >= t);
        if node_hit || time_hit {
            status = Some(SolveStatus::Limit);
        }
    }

    let salt = if global.config.inject_nondeterminism {
        SALT.fetch_add(1, Ordering::Relaxed)
    } else {
        0
    };
    global.event_log.push(Event::Round(RoundRecord {
        round: global.round,
        lower_bound: global.lower_bound,
        incumbent: global
            .incumbent
            .as_ref()
            .map(|i| global.model.to_original_sense(i.objective)),
        queue_size: global.queue.len() as u64,
        nodes: global.stats.nodes_explored,
        lp_iterations: global.stats.lp_iterations_total,
        cuts: global.cuts.len() as u64,
        conflicts: global.conflicts.len() as u64,
        work_units: global.round_work.clone(),
        dived: global.round_dived.clone(),
        dives: global.round_dives.clone(),
        salt,
    }));
    global.last_round_work = std::mem::replace(&mut global.round_work, vec![0; global.workers]);
    global.last_round_dives = global.round_dived.iter().flatten().count() as u64;
    global.round_dives = vec![0; global.workers];
    global.round_dived = vec![None; global.workers];

    if status.is_none() {
        maybe_restart(global);
    }
    status
}

fn maybe_restart(global: &mut GlobalState) {
    let fixed = global.domain.num_fixed(global.model.integer_set());
    let progress = RestartProgress {
        integer_vars: global.model.integer_set().len(),
        fixed_since_restart: fixed.saturating_sub(global.restart_fixed_base),
        nodes_since_restart: global.stats.nodes_explored - global.restart_nodes_base,
    };
    if !check_restart(&progress, &global.config.restart) {
        return;
    }
    global.queue.clear();
    let mut root = TreeNode::root(global.lower_bound);
    root.id = global.fresh_id();
    global.queue.push(root);
    global.restart_fixed_base = fixed;
    global.restart_nodes_base = global.stats.nodes_explored;
    global.stats.restarts += 1;
    global.event_log.push(Event::Restart {
        round: global.round,
        fixed: fixed as u64,
    });
}

/// Ages both pools with the usage gathered since the last call and sets
/// the adaptive LP iteration limit. Age counts dives, so a round with K
/// dives ages the pools K times.
pub fn age_and_adapt(global: &mut GlobalState) {
    let binding = std::mem::take(&mut global.binding_cuts);
    let useful = std::mem::take(&mut global.useful_conflicts);
    for _ in 0..global.last_round_dives.max(1) {
        global.cuts.age(&binding);
        global.conflicts.age(&useful);
    }
    let nodes = global.stats.nodes_explored.max(1);
    let avg = 2 * global.stats.lp_iterations_total / nodes;
    global.lp_iter_limit = (global.config.min_lp_iter_limit as u64).max(avg) as usize;
}

/// Candidate nodes dealt to private queues, as indices into the ranked
/// candidate list, with a predicted work for each candidate.
pub fn deal_candidates(global: &mut GlobalState, candidates: &[TreeNode]) -> (Vec<Vec<usize>>, Vec<f64>) {
    let k = global.workers;
    let mut lists = vec![Vec::new(); k];
    for r in 0..candidates.len() {
        lists[r % k].push(r);
    }
    let cfg = global.config.balancer;
    if !cfg.enabled || candidates.is_empty() {
        return (lists, vec![1.0; candidates.len()]);
    }
    let features: Vec<_> = candidates
        .iter()
        .map(|n| extract_features(n, global.lower_bound, global.dive_counter))
        .collect();
    let loads_of = |preds: &[f64]| -> Vec<f64> {
        lists
            .iter()
            .map(|l| l.iter().map(|&r| preds[r]).sum())
            .collect()
    };
    let base: Vec<f64> = features
        .iter()
        .map(|f| predict(&global.balancer, f, false))
        .collect();
    let report = detect_critical(&base, &loads_of(&base), cfg.rebalance_fraction);
    let preds: Vec<f64> = features
        .iter()
        .zip(&report.flagged)
        .map(|(f, &c)| predict(&global.balancer, f, c))
        .collect();
    let loads = loads_of(&preds);
    let rebalance = detect_critical(&preds, &loads, cfg.rebalance_fraction).rebalance;
    if rebalance && k > 1 {
        let keyed: Vec<(u64, f64)> = candidates.iter().map(|n| n.id).zip(preds.iter().copied()).collect();
        let mut assignment = assign_nodes(&keyed, k).per_worker;
        for l in &mut assignment {
            l.sort_unstable();
        }
        lists = assignment;
    }
    let measured: Vec<f64> = global.last_round_work.iter().map(|&w| w as f64).collect();
    global.params = adjust_parameters(&measured, &global.params, &cfg.clamps);
    (lists, preds)
}

/// Result of one worker's private-queue selection.
#[derive(Clone, Debug)]
pub struct SelectionRecord {
    pub worker_index: usize,
    pub selected: Option<SelectedNode>,
    pub unselected: Vec<TreeNode>,
    pub contributions: Contributions,
    /// Reporting only.
    pub completed_at: Duration,
}

/// Pops the top `K * pool_factor` nodes, deals them into the workers'
/// private queues (round-robin by rank, possibly rebalanced) and lets every
/// worker evaluate its queue concurrently.
pub fn select_phase(
    global: &mut GlobalState,
    workers: &mut [WorkerState],
) -> (Vec<SelectionRecord>, Vec<f64>, Vec<Duration>, Duration) {
    let k = global.workers;
    let policy = global.policy();
    let candidates = global.queue.pop_top(k * global.config.pool_factor.max(1), policy);
    let (lists, preds) = deal_candidates(global, &candidates);
    let mut slots: Vec<Option<TreeNode>> = candidates.into_iter().map(Some).collect();
    for (w, worker) in workers.iter_mut().enumerate() {
        worker.params = global.params[w];
        worker.private_queue = lists[w].iter().filter_map(|&r| slots[r].take()).collect();
    }
    let ctx = global.context();
    let inputs: Vec<&mut WorkerState> = workers.iter_mut().collect();
    let (mut records, busy, wall) = fork_join_timed(inputs, |w, worker| {
        let queue = std::mem::take(&mut worker.private_queue);
        let (selected, unselected) = select_from_private(worker, &ctx, queue);
        SelectionRecord {
            worker_index: w,
            selected,
            unselected,
            contributions: std::mem::take(&mut worker.local),
            completed_at: Duration::ZERO,
        }
    });
    for (rec, b) in records.iter_mut().zip(&busy) {
        rec.completed_at = *b;
    }
    (records, preds, busy, wall)
}

/// Merges selection records in worker order, returns unselected nodes to
/// the queue, runs the serial fallback for workers without a node, and
/// numbers the selected dives.
pub fn merge_selection(
    global: &mut GlobalState,
    workers: &mut [WorkerState],
    records: Vec<SelectionRecord>,
) -> Vec<Option<SelectedNode>> {
    let k = global.workers;
    let mut selected: Vec<Option<SelectedNode>> = Vec::with_capacity(k);
    let mut unselected = Vec::new();
    for (slot, rec) in records.into_iter().enumerate() {
        debug_assert_eq!(rec.worker_index, slot);
        merge_contributions(global, slot, rec.contributions);
        selected.push(rec.selected);
        unselected.extend(rec.unselected);
    }
    for node in unselected {
        global.queue.push(node);
    }
    let policy = global.policy();
    for w in 0..k {
        if selected[w].is_some() {
            continue;
        }
        if let Some(inc) = &global.incumbent {
            if workers[w]
                .incumbent
                .as_ref()
                .is_none_or(|own| inc.objective < own.objective)
            {
                workers[w].incumbent = Some(inc.clone());
            }
        }
        loop {
            if global
                .config
                .node_limit
                .is_some_and(|l| global.stats.nodes_explored >= l)
            {
                break;
            }
            let Some(node) = global.queue.pop(policy) else {
                break;
            };
            let ctx = global.context();
            let (sel, rest) = select_from_private(&mut workers[w], &ctx, vec![node]);
            debug_assert!(rest.is_empty());
            let local = std::mem::take(&mut workers[w].local);
            let deferred = !local.open_nodes.is_empty();
            merge_contributions(global, w, local);
            if sel.is_some() {
                selected[w] = sel;
                break;
            }
            if deferred {
                break;
            }
        }
    }
    for s in selected.iter_mut().flatten() {
        s.search_index = global.dive_counter;
        global.dive_counter += 1;
        let cadence = global.params[0].heuristic_cadence.max(1);
        s.heuristics_allowed =
            s.node.depth == 0 || global.incumbent.is_none() || s.search_index % cadence == 0;
        if global.config.balancer.enabled {
            let f = extract_features(&s.node, global.lower_bound, s.search_index);
            s.prediction = predict(&global.balancer, &f, false);
            s.features = Some(f);
        }
    }
    selected
}

/// Node selection: [`select_phase`] followed by [`merge_selection`].
pub fn parallel_node_selection(
    global: &mut GlobalState,
    workers: &mut [WorkerState],
) -> Vec<Option<SelectedNode>> {
    let (records, _, _, _) = select_phase(global, workers);
    merge_selection(global, workers, records)
}

/// Accumulates per-thread work and wait time.
struct ThreadClock {
    stats: Vec<ThreadStats>,
}

impl ThreadClock {
    fn new(k: usize) -> Self {
        Self {
            stats: vec![ThreadStats::default(); k],
        }
    }

    fn phase(&mut self, busy: &[Duration], wall: Duration) {
        for (s, b) in self.stats.iter_mut().zip(busy) {
            s.work_time += b.as_secs_f64();
            s.wait_time += wall.saturating_sub(*b).as_secs_f64();
        }
    }

    /// Coordinator-only section: work for the master, wait for the rest.
    fn serial(&mut self, dt: Duration) {
        for (w, s) in self.stats.iter_mut().enumerate() {
            if w == 0 {
                s.work_time += dt.as_secs_f64();
            } else {
                s.wait_time += dt.as_secs_f64();
            }
        }
    }
}

fn finish(
    mut global: GlobalState,
    status: SolveStatus,
    original: &MipModel,
    map: &PostsolveMap,
    start: Instant,
    clock: ThreadClock,
) -> SolveResult {
    let tol = global.config.tol;
    let status = match status {
        SolveStatus::Optimal | SolveStatus::Infeasible if global.stats.numerical_failures > 0 => {
            SolveStatus::Limit
        }
        s => s,
    };
    if status == SolveStatus::Optimal {
        global.lower_bound = global.lower_bound.max(global.incumbent_objective().min(global.lower_bound));
    }
    let solution = global
        .incumbent
        .as_ref()
        .map(|inc| Solution::evaluate(original, map.expand(&inc.values), &tol));
    let bound = original.to_original_sense(global.lower_bound);
    global.event_log.push(Event::Finish {
        status: status.as_str().to_string(),
        objective: solution.as_ref().map(|s| s.objective),
        bound,
        nodes: global.stats.nodes_explored,
        lp_iterations: global.stats.lp_iterations_total,
    });
    let mut threads = clock.stats;
    for (w, t) in threads.iter_mut().enumerate() {
        t.work_units = global.worker_work[w];
        t.dives = global.worker_dives[w];
    }
    SolveResult {
        status,
        solution,
        bound,
        feature_importance: global.balancer.feature_importance(),
        balancer_retrains: global.balancer.retrain_count,
        stats: global.stats,
        event_log: global.event_log,
        threads,
        wall_time: start.elapsed(),
    }
}

/// State after presolve and root processing.
#[derive(Clone, Debug)]
pub struct Initialized {
    pub global: GlobalState,
    pub map: PostsolveMap,
    /// Set when the solve already ended (infeasible or unbounded).
    pub status: Option<SolveStatus>,
}

/// Presolves `model`, builds the global state for `k` workers and
/// processes the root. The root node is left in the queue.
pub fn initialize(model: &MipModel, config: &SolverConfig, k: usize) -> Initialized {
    let k = k.max(1);
    let mut config = config.clone();
    config.threads = k;
    let identity = || PostsolveMap::identity(model.num_vars());
    let (reduced, map, mut status) = if model.empty_domain().is_some() {
        (model.clone(), identity(), Some(SolveStatus::Infeasible))
    } else if config.presolve {
        match presolve(model, &config.tol) {
            PresolveOutcome::Infeasible => (model.clone(), identity(), Some(SolveStatus::Infeasible)),
            PresolveOutcome::Reduced { model, map } => (model, map, None),
        }
    } else {
        (model.clone(), identity(), None)
    };
    let mut global = GlobalState::new(reduced, config, k);
    global.event_log.push(Event::Header {
        workers: k as u64,
        seed: global.config.seed,
        num_vars: global.model.num_vars() as u64,
        num_cons: global.model.num_cons() as u64,
    });
    if status.is_none() && global.domain.is_infeasible() {
        status = Some(SolveStatus::Infeasible);
    }
    if status.is_none() {
        if global.config.heuristics {
            for sol in crate::heuristics::trivial_solutions(&global.model, &global.config.tol) {
                global.offer(sol.values, 0);
            }
        }
        if root::process_root(&mut global) == root::RootOutcome::Unbounded {
            status = Some(SolveStatus::Unbounded);
        }
    }
    Initialized { global, map, status }
}

/// The round engine behind both solvers, with `k` workers.
pub(crate) fn run_engine(model: &MipModel, config: &SolverConfig, k: usize) -> SolveResult {
    let start = Instant::now();
    let k = k.max(1);
    let mut clock = ThreadClock::new(k);
    let t0 = Instant::now();
    let Initialized {
        mut global,
        map,
        status,
    } = initialize(model, config, k);
    if let Some(status) = status {
        return finish(global, status, model, &map, start, clock);
    }
    let mut workers = replicate(&global, k);
    clock.serial(t0.elapsed());
    let mut selected = timed_selection(&mut global, &mut workers, &mut clock);
    let status = loop {
        global.round += 1;
        global.stats.rounds = global.round;
        if selected.iter().any(Option::is_some) {
            let (records, busy, wall) = parallel_dive_phase(&global, &mut workers, selected);
            clock.phase(&busy, wall);
            let t = Instant::now();
            consolidate(&mut global, records);
            clock.serial(t.elapsed());
        }
        let t = Instant::now();
        if let Some(status) = global_sync(&mut global, start.elapsed()) {
            clock.serial(t.elapsed());
            break status;
        }
        age_and_adapt(&mut global);
        broadcast(&global, &mut workers);
        clock.serial(t.elapsed());
        selected = timed_selection(&mut global, &mut workers, &mut clock);
    };
    finish(global, status, model, &map, start, clock)
}

fn timed_selection(
    global: &mut GlobalState,
    workers: &mut [WorkerState],
    clock: &mut ThreadClock,
) -> Vec<Option<SelectedNode>> {
    let (records, _, busy, wall) = select_phase(global, workers);
    clock.phase(&busy, wall);
    let t = Instant::now();
    let selected = merge_selection(global, workers, records);
    clock.serial(t.elapsed());
    selected
}

/// Parallel solve with `config.threads` workers.
pub fn solve_parallel(model: &MipModel, config: &SolverConfig) -> SolveResult {
    run_engine(model, config, config.threads)
}
