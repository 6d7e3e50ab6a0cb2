//! Run configuration read from a TOML file. Every key is optional and
//! command line flags take precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub tree: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub weight: Option<String>,
    pub k: Option<Vec<usize>>,
    pub k_lambda: Option<usize>,
    pub method: Option<String>,
    pub family: Option<String>,
    /// Per-edge family overrides keyed `"a-b"`.
    pub edge_family: BTreeMap<String, String>,
    pub thresholds: Option<Vec<f64>>,
    pub margins: Option<String>,
    pub threshold_p: Option<f64>,
    pub seed: Option<u64>,
    pub n_mc: Option<usize>,
    // simulation
    pub fixture: Option<String>,
    pub gamma: Option<PathBuf>,
    pub psi: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub noise_shape: Option<f64>,
    pub reps: Option<usize>,
    pub true_tree: Option<PathBuf>,
    pub rare_coords: Option<Vec<usize>>,
    pub rare_p: Option<f64>,
    pub oracle_tol: Option<f64>,
    // declustering
    pub months: Option<Vec<u32>>,
    pub window: Option<usize>,
    pub mode: Option<String>,
    pub mrl: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }
}

/// Flag value if given, else the config value.
pub fn pick<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}
