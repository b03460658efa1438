use detmip::bnb::{solve_sequential, SolveStatus, SolverConfig};
use detmip::instances::{fixtures, random_mip, RandomMipParams};
use detmip::model::{brute_force_optimum, Enumeration};
use detmip::model::{check_feasible, MipModel, Tolerances};
use detmip::parallel::solve_parallel;

const CAP: u64 = 1 << 22;

fn check(name: &str, model: &MipModel, config: &SolverConfig, k: Option<usize>) {
    let result = match k {
        None => solve_sequential(model, config),
        Some(k) => solve_parallel(model, &SolverConfig { threads: k, ..config.clone() }),
    };
    let oracle = brute_force_optimum(model, CAP).unwrap();
    match oracle {
        Enumeration::Optimal(best) => {
            assert_eq!(result.status, SolveStatus::Optimal, "{name} k={k:?}");
            let sol = result.solution.as_ref().unwrap();
            assert!(
                (sol.objective - best.objective).abs() <= 1e-6,
                "{name} k={k:?}: {} vs oracle {}",
                sol.objective,
                best.objective
            );
            let f = check_feasible(model, &sol.values, &Tolerances::default()).unwrap();
            assert!(f.feasible, "{name} k={k:?}: {f:?}");
        }
        Enumeration::Infeasible => {
            assert_eq!(result.status, SolveStatus::Infeasible, "{name} k={k:?}");
        }
        other => panic!("{name}: oracle returned {other:?}"),
    }
}

#[test]
fn fixtures_match_oracle() {
    let config = SolverConfig::default();
    for (name, model) in fixtures() {
        for k in [None, Some(1), Some(2), Some(4)] {
            check(name, &model, &config, k);
        }
    }
}

#[test]
fn random_mips_match_oracle() {
    let config = SolverConfig::default();
    let params = RandomMipParams::default();
    for seed in 0..40 {
        let model = random_mip(seed, &params);
        for k in [None, Some(3)] {
            check(&format!("rand{seed}"), &model, &config, k);
        }
    }
}

#[test]
fn random_mips_without_presolve_or_cuts() {
    let config = SolverConfig {
        presolve: false,
        cuts: false,
        heuristics: false,
        ..SolverConfig::default()
    };
    let params = RandomMipParams::default();
    for seed in 100..120 {
        let model = random_mip(seed, &params);
        check(&format!("rand{seed}"), &model, &config, Some(2));
    }
}
