//! Benchmark runner, determinism verification and metrics for `detmip`.

pub mod bench;
pub mod config;
pub mod metrics;
pub mod report;
pub mod verify;

use thiserror::Error;

pub use bench::{bench_instance, run_benchmark, InstanceReport, KSummary, ParallelRun, SuiteReport};
pub use config::{load_config, BenchConfig, FileConfig};
pub use metrics::{aggregate_wait_ratio, geometric_mean, idle_rate, round2, speedup, thread_idle_rate, MetricError};
pub use report::{render_table, render_threads, RunReport, Timing};
pub use verify::{verify_determinism, DeterminismReport, Divergence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("at least two repetitions are needed, got {0}")]
    Repetitions(usize),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
