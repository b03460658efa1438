//! TOML configuration file.

use std::path::Path;

use detmip::bnb::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Worker counts for the parallel runs.
    pub threads: Vec<usize>,
    /// Repetitions per worker count for the determinism check; below 2 the
    /// check is skipped.
    pub repetitions: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            threads: vec![2, 4],
            repetitions: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub solver: SolverConfig,
    pub bench: BenchConfig,
}

pub fn load_config(path: &Path) -> Result<FileConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.display().to_string(), e.to_string()))?;
    toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
}
