//! Per-run reports. Wall-clock quantities live in [`Timing`], apart from the
//! deterministic fields.

use detmip::bnb::{SolveResult, SolveStatus};
use detmip::parallel::ThreadStats;
use serde::{Deserialize, Serialize};

use crate::metrics::{aggregate_wait_ratio, thread_idle_rate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time: f64,
    pub threads: Vec<ThreadStats>,
    /// Per-thread `W / (W + E)` in percent.
    pub idle_rates: Vec<f64>,
    /// `sum(W) / sum(E)` in percent.
    pub wait_ratio: Option<f64>,
    pub speedup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub workers: usize,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub dives: u64,
    pub hash: String,
    pub timing: Timing,
}

impl RunReport {
    pub fn from_result(name: &str, workers: usize, result: &SolveResult) -> Self {
        let idle_rates = result
            .threads
            .iter()
            .map(|t| thread_idle_rate(t).unwrap_or(0.0))
            .collect();
        Self {
            name: name.to_string(),
            workers,
            status: result.status,
            objective: result.objective(),
            bound: result.bound,
            nodes: result.stats.nodes_explored,
            lp_iterations: result.stats.lp_iterations_total,
            dives: result.stats.dives,
            hash: result.event_log.hash(),
            timing: Timing {
                wall_time: result.wall_time.as_secs_f64(),
                threads: result.threads.clone(),
                idle_rates,
                wait_ratio: aggregate_wait_ratio(&result.threads).ok(),
                speedup: None,
            },
        }
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

/// Fixed-width table of runs.
pub fn render_table(runs: &[RunReport]) -> String {
    let mut out = format!(
        "{:<24} {:>3} {:<10} {:>16} {:>9} {:>11} {:>10} {:>8} {:>8}  {}\n",
        "instance", "K", "status", "objective", "nodes", "lp iters", "time[s]", "speedup", "idle%", "hash"
    );
    for r in runs {
        let idle = if r.timing.idle_rates.is_empty() {
            None
        } else {
            Some(r.timing.idle_rates.iter().sum::<f64>() / r.timing.idle_rates.len() as f64)
        };
        out.push_str(&format!(
            "{:<24} {:>3} {:<10} {:>16} {:>9} {:>11} {:>10.3} {:>8} {:>8}  {}\n",
            r.name,
            r.workers,
            r.status.as_str(),
            fmt_opt(r.objective, 6),
            r.nodes,
            r.lp_iterations,
            r.timing.wall_time,
            fmt_opt(r.timing.speedup, 2),
            fmt_opt(idle, 2),
            &r.hash[..12],
        ));
    }
    out
}

/// Per-thread breakdown in the `Work/Wait` layout.
pub fn render_threads(r: &RunReport) -> String {
    let mut out = format!("{:<10} {:>22} {:>7} {:>8}\n", "thread", "work/wait [s]", "dives", "idle%");
    for (i, (t, idle)) in r.timing.threads.iter().zip(&r.timing.idle_rates).enumerate() {
        let name = if i == 0 { "master".to_string() } else { format!("worker {i}") };
        out.push_str(&format!(
            "{:<10} {:>22} {:>7} {:>8.2}\n",
            name,
            format!("{:.3}/{:.3}", t.work_time, t.wait_time),
            t.dives,
            idle
        ));
    }
    out
}
