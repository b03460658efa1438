use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use detmip::bnb::{solve_sequential, SolverConfig};
use detmip::instances::{fixtures, hard_knapsack, random_mip, RandomMipParams};
use detmip::model::{parse_mps, write_mps, MipModel};
use detmip::parallel::solve_parallel;
use detmip_harness::{
    load_config, render_table, render_threads, run_benchmark, verify_determinism, BenchConfig,
    FileConfig, RunReport,
};

#[derive(Parser)]
#[command(name = "detmip", version, about = "Deterministic parallel MIP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Worker count K.
    #[arg(short = 'k', long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    gap_rel: Option<f64>,
    #[arg(long)]
    gap_abs: Option<f64>,
    /// Disable the workload balancer.
    #[arg(long)]
    no_balancer: bool,
    /// TOML file with `[solver]` and `[bench]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverArgs {
    fn resolve(&self) -> Result<FileConfig, String> {
        let mut file = match &self.config {
            Some(p) => load_config(p).map_err(|e| e.to_string())?,
            None => FileConfig::default(),
        };
        let s = &mut file.solver;
        if let Some(k) = self.threads {
            s.threads = k.max(1);
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if self.time_limit.is_some() {
            s.time_limit = self.time_limit;
        }
        if self.node_limit.is_some() {
            s.node_limit = self.node_limit;
        }
        if let Some(g) = self.gap_rel {
            s.tol.opt_gap_rel = g;
        }
        if let Some(g) = self.gap_abs {
            s.tol.opt_gap_abs = g;
        }
        if self.no_balancer {
            s.balancer.enabled = false;
        }
        s.tol.validate().map_err(|e| e.to_string())?;
        Ok(file)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MPS file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Use the single-worker solver entry point.
        #[arg(long)]
        sequential: bool,
        /// Print the per-thread breakdown.
        #[arg(long)]
        threads_table: bool,
    },
    /// Benchmark every MPS file in a directory.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated worker counts, e.g. 2,4,8.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Determinism repetitions per worker count (0 disables).
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Check run-to-run determinism on one MPS file.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Write generated instances as MPS files.
    Generate {
        dir: PathBuf,
        /// fixtures, random or knapsack.
        #[arg(long, default_value = "fixtures")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Knapsack size as items,rows.
        #[arg(long, value_delimiter = ',', default_values_t = [45usize, 4])]
        size: Vec<usize>,
    },
}

fn read_model(path: &Path) -> Result<MipModel, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_mps(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn solve(file: &Path, config: &SolverConfig, sequential: bool, threads_table: bool) -> Result<ExitCode, String> {
    let model = read_model(file)?;
    let result = if sequential {
        solve_sequential(&model, config)
    } else {
        solve_parallel(&model, config)
    };
    let workers = if sequential { 1 } else { config.threads.max(1) };
    let report = RunReport::from_result(model.name(), workers, &result);
    println!("{}", json(&report)?);
    eprint!("{}", render_table(std::slice::from_ref(&report)));
    if threads_table {
        eprint!("{}", render_threads(&report));
    }
    if let Some(sol) = &result.solution {
        for (name, v) in model.col_names().iter().zip(&sol.values) {
            if v.abs() > 1e-9 {
                eprintln!("  {name} = {v}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(dir: &Path, file: FileConfig, ks: Option<Vec<usize>>, reps: Option<usize>) -> Result<ExitCode, String> {
    let mut bench: BenchConfig = file.bench;
    if let Some(ks) = ks {
        bench.threads = ks;
    }
    if let Some(r) = reps {
        bench.repetitions = r;
    }
    let suite = run_benchmark(dir, &file.solver, &bench).map_err(|e| e.to_string())?;
    for inst in &suite.instances {
        println!("{}", json(inst)?);
    }
    for s in &suite.summary {
        println!("{}", json(s)?);
    }
    eprint!("{}", render_table(&suite.runs()));
    for inst in suite.instances.iter().filter(|i| i.error.is_some()) {
        eprintln!("{}: FAILED {}", inst.name, inst.error.as_deref().unwrap_or(""));
    }
    for s in &suite.summary {
        eprintln!(
            "K={}: geomean speedup {} | mean idle {} | deterministic {} | objectives match {}",
            s.workers,
            s.geomean_speedup.map_or("-".into(), |v| format!("{v:.2}")),
            s.mean_idle_rate.map_or("-".into(), |v| format!("{v:.2}%")),
            s.all_deterministic,
            s.all_objectives_match
        );
    }
    Ok(if suite.deterministic() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn verify(file: &Path, config: &SolverConfig, reps: usize) -> Result<ExitCode, String> {
    let model = read_model(file)?;
    let report = verify_determinism(&model, config, reps).map_err(|e| e.to_string())?;
    println!("{}", json(&report)?);
    if report.deterministic {
        eprintln!("{}: deterministic over {reps} runs at K={} ({})", model.name(), report.workers, &report.hashes[0][..16]);
        Ok(ExitCode::SUCCESS)
    } else {
        let d = report.divergence.as_ref().expect("divergence recorded");
        eprintln!("{}: run {} diverges at event {}", model.name(), d.repetition, d.event_index);
        Ok(ExitCode::from(2))
    }
}

fn generate(dir: &Path, kind: &str, count: u64, seed: u64, size: &[usize]) -> Result<ExitCode, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let models: Vec<MipModel> = match kind {
        "fixtures" => fixtures().into_iter().map(|(_, m)| m).collect(),
        "random" => (seed..seed + count).map(|s| random_mip(s, &RandomMipParams::default())).collect(),
        "knapsack" => {
            let (n, m) = (size.first().copied().unwrap_or(45), size.get(1).copied().unwrap_or(4));
            (seed..seed + count).map(|s| hard_knapsack(s, n, m)).collect()
        }
        other => return Err(format!("unknown kind {other:?}")),
    };
    for m in &models {
        let path = dir.join(format!("{}.mps", m.name()));
        std::fs::write(&path, write_mps(m)).map_err(|e| e.to_string())?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve { file, solver, sequential, threads_table } => {
            solve(&file, &solver.resolve()?.solver, sequential, threads_table)
        }
        Command::Bench { dir, solver, ks, reps } => bench(&dir, solver.resolve()?, ks, reps),
        Command::Verify { file, solver, reps } => verify(&file, &solver.resolve()?.solver, reps),
        Command::Generate { dir, kind, count, seed, size } => generate(&dir, &kind, count, seed, &size),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
