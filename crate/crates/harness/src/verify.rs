//! Run-to-run determinism checks.

use detmip::bnb::SolverConfig;
use detmip::model::MipModel;
use detmip::parallel::{first_divergence, solve_parallel, Event};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Repetition whose log first differs from repetition 0.
    pub repetition: usize,
    pub event_index: usize,
    pub expected: Option<Event>,
    pub found: Option<Event>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminismReport {
    pub deterministic: bool,
    pub workers: usize,
    pub hashes: Vec<String>,
    pub divergence: Option<Divergence>,
}

/// Solves `model` `repetitions` times with `solve_parallel` and compares the
/// event logs.
pub fn verify_determinism(
    model: &MipModel,
    config: &SolverConfig,
    repetitions: usize,
) -> Result<DeterminismReport, HarnessError> {
    if repetitions < 2 {
        return Err(HarnessError::Repetitions(repetitions));
    }
    let runs: Vec<_> = (0..repetitions).map(|_| solve_parallel(model, config)).collect();
    let hashes: Vec<String> = runs.iter().map(|r| r.event_log.hash()).collect();
    let divergence = runs.iter().enumerate().skip(1).find_map(|(rep, r)| {
        first_divergence(&runs[0].event_log, &r.event_log).map(|i| Divergence {
            repetition: rep,
            event_index: i,
            expected: runs[0].event_log.events().get(i).cloned(),
            found: r.event_log.events().get(i).cloned(),
        })
    });
    Ok(DeterminismReport {
        deterministic: divergence.is_none(),
        workers: config.threads,
        hashes,
        divergence,
    })
}
