//! Benchmark suite over a directory of MPS files.

use std::path::Path;

use detmip::balance::NUM_FEATURES;
use detmip::bnb::SolverConfig;
use detmip::model::parse_mps;
use detmip::parallel::solve_parallel;
use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;
use crate::metrics::{geometric_mean, speedup};
use crate::report::RunReport;
use crate::verify::{verify_determinism, DeterminismReport};
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelRun {
    pub report: RunReport,
    pub objective_matches_serial: bool,
    pub determinism: Option<DeterminismReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub error: Option<String>,
    /// Baseline: the parallel engine with one worker.
    pub serial: Option<RunReport>,
    pub parallel: Vec<ParallelRun>,
    pub feature_importance: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub workers: usize,
    pub geomean_speedup: Option<f64>,
    pub mean_idle_rate: Option<f64>,
    pub all_deterministic: bool,
    pub all_objectives_match: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub instances: Vec<InstanceReport>,
    pub summary: Vec<KSummary>,
}

impl SuiteReport {
    pub fn deterministic(&self) -> bool {
        self.summary.iter().all(|s| s.all_deterministic)
    }

    pub fn runs(&self) -> Vec<RunReport> {
        self.instances
            .iter()
            .flat_map(|i| i.serial.iter().cloned().chain(i.parallel.iter().map(|p| p.report.clone())))
            .collect()
    }
}

fn objectives_match(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    }
}

/// Runs one instance: the K=1 baseline, then every configured K.
pub fn bench_instance(name: &str, model: &detmip::model::MipModel, solver: &SolverConfig, bench: &BenchConfig) -> Result<InstanceReport, HarnessError> {
    let serial_config = SolverConfig { threads: 1, ..solver.clone() };
    let serial_result = solve_parallel(model, &serial_config);
    let serial = RunReport::from_result(name, 1, &serial_result);
    let mut parallel = Vec::new();
    for &k in &bench.threads {
        let config = SolverConfig { threads: k, ..solver.clone() };
        let result = solve_parallel(model, &config);
        let mut report = RunReport::from_result(name, k, &result);
        report.timing.speedup = speedup(serial.timing.wall_time, report.timing.wall_time).ok();
        let determinism = if bench.repetitions >= 2 {
            let mut d = verify_determinism(model, &config, bench.repetitions)?;
            d.deterministic &= d.hashes.iter().all(|h| *h == report.hash);
            Some(d)
        } else {
            None
        };
        parallel.push(ParallelRun {
            objective_matches_serial: objectives_match(serial.objective, report.objective, 1e-6),
            report,
            determinism,
        });
    }
    let importance = serial_result
        .feature_importance
        .iter()
        .take(NUM_FEATURES)
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
    Ok(InstanceReport {
        name: name.to_string(),
        error: None,
        serial: Some(serial),
        parallel,
        feature_importance: importance,
    })
}

fn failed(name: &str, error: String) -> InstanceReport {
    InstanceReport {
        name: name.to_string(),
        error: Some(error),
        serial: None,
        parallel: Vec::new(),
        feature_importance: Vec::new(),
    }
}

/// Benchmarks every `.mps` file in `dir`, in file-name order. Instances that
/// fail to load are recorded and skipped.
pub fn run_benchmark(dir: &Path, solver: &SolverConfig, bench: &BenchConfig) -> Result<SuiteReport, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(dir.display().to_string(), e.to_string());
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("mps")))
        .collect();
    files.sort();
    let mut instances = Vec::new();
    for path in files {
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                instances.push(failed(&name, e.to_string()));
                continue;
            }
        };
        match parse_mps(&text) {
            Ok(model) => instances.push(bench_instance(&name, &model, solver, bench)?),
            Err(e) => instances.push(failed(&name, e.to_string())),
        }
    }
    let summary = bench
        .threads
        .iter()
        .map(|&k| summarize(&instances, k))
        .collect();
    Ok(SuiteReport { instances, summary })
}

fn summarize(instances: &[InstanceReport], k: usize) -> KSummary {
    let runs: Vec<&ParallelRun> = instances
        .iter()
        .flat_map(|i| i.parallel.iter().filter(|p| p.report.workers == k))
        .collect();
    let speedups: Vec<f64> = runs.iter().filter_map(|p| p.report.timing.speedup).collect();
    let idles: Vec<f64> = runs.iter().flat_map(|p| p.report.timing.idle_rates.iter().copied()).collect();
    KSummary {
        workers: k,
        geomean_speedup: geometric_mean(&speedups).ok(),
        mean_idle_rate: (!idles.is_empty()).then(|| idles.iter().sum::<f64>() / idles.len() as f64),
        all_deterministic: runs.iter().all(|p| p.determinism.as_ref().is_none_or(|d| d.deterministic)),
        all_objectives_match: runs.iter().all(|p| p.objective_matches_serial),
    }
}
