//! Sequential branch-and-bound: node records, queue, pseudocosts, presolve,
//! and the per-node search steps shared with the parallel engine.

mod node;
mod presolve;
mod pseudocost;
mod queue;
mod search;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::balance::{BalancerConfig, DiveParameters};
use crate::conflict::{DEFAULT_CONFLICT_CAPACITY, DEFAULT_CONFLICT_MAX_AGE};
use crate::heuristics::{DEFAULT_RENS_BUDGET, DEFAULT_RINS_BUDGET, DEFAULT_TRIALS};
use crate::model::{MipModel, Solution, Tolerances};
use crate::parallel::{EventLog, ThreadStats};
use crate::separation::{SepConfig, DEFAULT_CUT_CAPACITY, DEFAULT_CUT_MAX_AGE};

pub use node::{BranchDecision, NodeInfo, ParentBranch, RowKey, StoredBasis, TreeNode};
pub use presolve::{presolve, PostsolveMap, PresolveOutcome};
pub use pseudocost::{PcObservation, Pseudocosts};
pub use queue::{sort_by_policy, NodeQueue, SelectionPolicy};
pub use search::{
    dive, evaluate_node, select_branch_var, select_from_private, BranchError, Contributions,
    DiveRecord, Incumbent, NodeEval, NodeOutcome, SearchContext, SelectedNode, WorkerState,
    UNASSIGNED,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestartConfig {
    pub enabled: bool,
    pub fix_fraction: f64,
    pub node_cap: u64,
}

impl Default for RestartConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            fix_fraction: 0.2,
            node_cap: 1000,
        }
    }
}

/// Counters consulted by [`check_restart`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RestartProgress {
    pub integer_vars: usize,
    pub fixed_since_restart: usize,
    pub nodes_since_restart: u64,
}

/// Restart when enough integer variables were fixed globally early enough.
pub fn check_restart(progress: &RestartProgress, config: &RestartConfig) -> bool {
    if !config.enabled || progress.integer_vars == 0 || progress.fixed_since_restart == 0 {
        return false;
    }
    let fraction = progress.fixed_since_restart as f64 / progress.integer_vars as f64;
    fraction >= config.fix_fraction && progress.nodes_since_restart <= config.node_cap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: Tolerances,
    /// Worker count K for the parallel solver.
    pub threads: usize,
    pub seed: u64,
    pub node_limit: Option<u64>,
    /// Wall-clock limit in seconds. Runs that hit it end with `Limit` and
    /// are outside the determinism guarantee.
    pub time_limit: Option<f64>,
    /// Internal-sense objective value; only solutions strictly below it are
    /// of interest.
    pub cutoff: Option<f64>,
    pub presolve: bool,
    pub heuristics: bool,
    pub cuts: bool,
    pub conflicts: bool,
    pub root_sep_rounds: usize,
    pub root_lp_iter_limit: usize,
    pub sep: SepConfig,
    /// Cuts kept from the separation round at a dive start.
    pub node_max_cuts: usize,
    pub dive: DiveParameters,
    pub rounding_trials: usize,
    pub rens_budget: u64,
    pub rins_budget: u64,
    pub cut_max_age: u32,
    pub cut_capacity: usize,
    pub conflict_max_age: u32,
    pub conflict_capacity: usize,
    /// Pool entries transmitted per broadcast (most recent by id).
    pub broadcast_limit: usize,
    /// Candidate nodes per worker at node selection.
    pub pool_factor: usize,
    pub min_lp_iter_limit: usize,
    pub restart: RestartConfig,
    pub balancer: BalancerConfig,
    /// Test hook: mixes a process-wide counter into the event log so that
    /// repeated runs diverge.
    #[serde(skip)]
    pub inject_nondeterminism: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            threads: 1,
            seed: 0,
            node_limit: None,
            time_limit: None,
            cutoff: None,
            presolve: true,
            heuristics: true,
            cuts: true,
            conflicts: true,
            root_sep_rounds: 5,
            root_lp_iter_limit: 1_000_000,
            sep: SepConfig::default(),
            node_max_cuts: 10,
            dive: DiveParameters::default(),
            rounding_trials: DEFAULT_TRIALS,
            rens_budget: DEFAULT_RENS_BUDGET,
            rins_budget: DEFAULT_RINS_BUDGET,
            cut_max_age: DEFAULT_CUT_MAX_AGE,
            cut_capacity: DEFAULT_CUT_CAPACITY,
            conflict_max_age: DEFAULT_CONFLICT_MAX_AGE,
            conflict_capacity: DEFAULT_CONFLICT_CAPACITY,
            broadcast_limit: 200,
            pool_factor: 4,
            min_lp_iter_limit: 1000,
            restart: RestartConfig::default(),
            balancer: BalancerConfig::default(),
            inject_nondeterminism: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::Unbounded => "UNBOUNDED",
            SolveStatus::Limit => "LIMIT",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub nodes_explored: u64,
    pub lp_iterations_total: u64,
    pub leaves: u64,
    pub dives: u64,
    /// (nodes explored when found, objective in the original sense).
    pub incumbent_history: Vec<(u64, f64)>,
    pub numerical_failures: u64,
    pub rounds: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Solution of the original model.
    pub solution: Option<Solution>,
    /// Best bound in the original sense.
    pub bound: f64,
    pub stats: SolverStats,
    pub event_log: EventLog,
    pub threads: Vec<ThreadStats>,
    pub wall_time: Duration,
    /// |standardized stage-1 weight| per dive feature.
    pub feature_importance: Vec<(&'static str, f64)>,
    pub balancer_retrains: u64,
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }
}

/// Single-worker solve. Runs the same round engine as the parallel solver
/// with one worker and no helper threads.
pub fn solve_sequential(model: &MipModel, config: &SolverConfig) -> SolveResult {
    crate::parallel::run_engine(model, config, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restart_rule() {
        let on = RestartConfig {
            enabled: true,
            ..RestartConfig::default()
        };
        let mut p = RestartProgress {
            integer_vars: 100,
            fixed_since_restart: 0,
            nodes_since_restart: 500,
        };
        assert!(!check_restart(&p, &on));
        p.fixed_since_restart = 25;
        assert!(check_restart(&p, &on));
        assert!(!check_restart(&p, &RestartConfig::default()));
        p.nodes_since_restart = 1001;
        assert!(!check_restart(&p, &on));
    }
}
