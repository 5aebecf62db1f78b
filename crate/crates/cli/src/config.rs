//! Resolved run configurations: built-in defaults, then the `--config` file,
//! then explicit flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use unceval::experiments::{default_n_grid, linear_grid, SynthBounds};
use unceval::gof::DEFAULT_BINS;
use unceval::mc::Metric;
use unceval::srmse::Normalization;

use crate::args::{GofDriver, LevelsArg, SrmseDriver, SweepDriver, VaryArg};
use crate::CliError;

/// Merges `file` and `flags` over the defaults of `C` and deserialises.
///
/// Keys in the file that `C` does not know are a usage error.
pub fn resolve<C, F>(file: Option<&Path>, flags: &F) -> Result<C, CliError>
where
    C: Default + Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(C::default()).expect("config serialises") else {
        unreachable!("configs are structs")
    };
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let Value::Object(obj) = value else {
            return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
        };
        overlay(&mut merged, obj, Some(path))?;
    }
    let Value::Object(obj) = serde_json::to_value(flags).expect("flags serialise") else {
        unreachable!("flags are structs")
    };
    overlay(&mut merged, obj, None)?;
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>, source: Option<&Path>) -> Result<(), CliError> {
    for (k, v) in top {
        if !base.contains_key(&k) {
            let from = source.map_or("flags".to_string(), |p| p.display().to_string());
            return Err(CliError::Usage(format!("unknown config key '{k}' in {from}")));
        }
        base.insert(k, v);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    pub models: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub predictor: Option<String>,
    pub sigma_floor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagateConfig {
    #[serde(flatten)]
    pub input: InputConfig,
    pub metric: Metric,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        Self { input: InputConfig::default(), metric: Metric::Rmse }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub input: InputConfig,
    pub metric: Metric,
    pub tau: usize,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { input: InputConfig::default(), metric: Metric::Rmse, tau: 10_000, seed: 42 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RankConfig {
    pub systems: Option<PathBuf>,
    pub p_max: f64,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self { systems: None, p_max: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GofConfig {
    pub driver: GofDriver,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub tau: usize,
    pub bins: usize,
    pub seed: u64,
    pub bounds: SynthBounds,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            driver: GofDriver::Matching,
            n_grid: default_n_grid(),
            reps: 10,
            tau: 20_000,
            bins: DEFAULT_BINS,
            seed: 42,
            bounds: SynthBounds::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub driver: SweepDriver,
    pub vary: VaryArg,
    pub grid: Option<Vec<f64>>,
    pub fixed_n: usize,
    pub fixed_delta: Option<f64>,
    pub fixed_sigma_sq: Option<f64>,
    pub levels: LevelsArg,
    pub delta_grid: Vec<f64>,
    pub n_levels: Vec<usize>,
    pub sigma_levels: Vec<f64>,
    pub n: usize,
    pub ratio: f64,
    pub replications: usize,
    pub seed: u64,
    pub bounds: SynthBounds,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let (lo, hi) = SynthBounds::default().sigma_sq_range;
        Self {
            driver: SweepDriver::Error,
            vary: VaryArg::Delta,
            grid: None,
            fixed_n: 100,
            fixed_delta: None,
            fixed_sigma_sq: None,
            levels: LevelsArg::N,
            delta_grid: linear_grid(0.0, 4.0, 0.1),
            n_levels: vec![50, 100, 250, 500, 1000, 2500],
            sigma_levels: vec![lo, 0.5 * (lo + hi), hi],
            n: 1000,
            ratio: 0.9,
            replications: 20,
            seed: 42,
            bounds: SynthBounds::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SrmseCmdConfig {
    pub driver: SrmseDriver,
    #[serde(flatten)]
    pub input: InputConfig,
    pub alpha: f64,
    pub tau: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub exclude_empty: bool,
    pub n: usize,
    pub delta_grid: Vec<f64>,
    pub ratio: f64,
    pub bounds: SynthBounds,
}

impl Default for SrmseCmdConfig {
    fn default() -> Self {
        Self {
            driver: SrmseDriver::Simulate,
            input: InputConfig::default(),
            alpha: 0.05,
            tau: 20_000,
            seed: 42,
            normalization: Normalization::Kept,
            exclude_empty: false,
            n: 1000,
            delta_grid: linear_grid(0.0, 4.0, 0.25),
            ratio: 0.9,
            bounds: SynthBounds::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeConfig {
    pub ratings: Option<PathBuf>,
    pub systems: Vec<String>,
    pub metric: Metric,
    pub sigma_floor: Option<f64>,
    pub common_trials: bool,
    pub models_out: Option<PathBuf>,
    pub scores_out: Option<PathBuf>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            ratings: None,
            systems: Vec::new(),
            metric: Metric::Rmse,
            sigma_floor: None,
            common_trials: false,
            models_out: None,
            scores_out: None,
        }
    }
}
