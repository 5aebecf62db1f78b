use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use unceval::mc::Metric;
use unceval::srmse::Normalization;

#[derive(Debug, Parser)]
#[command(name = "unceval", version, about = "Evaluate predictive models under human feedback uncertainty")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic MSE/RMSE distribution of one system
    Propagate(PropagateArgs),
    /// Monte-Carlo samples of a metric plus their Gaussian fit
    Simulate(SimulateArgs),
    /// Rank systems by metric distribution with pairwise error probabilities
    Rank(RankArgs),
    /// Analytic vs simulated distributions on synthetic sets
    Gof(GofArgs),
    /// Sensitivity and error-probability sweeps
    Sweep(SweepArgs),
    /// Significance-filtered RMSE simulation and comparison
    Srmse(SrmseArgs),
    /// Repeated ratings: fitted models, per-trial scores, ranking frequencies
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON file with config keys; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Where a system's pairs come from.
#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// models.csv (user_id,item_id,mu,sigma)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<PathBuf>,
    /// ratings.csv (user_id,item_id,trial,rating); models are fitted from it
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    /// predictions.csv (user_id,item_id,prediction)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    /// Baseline predictor (R1, R2, R3) used when no predictions file is given
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictor: Option<String>,
    /// Lower bound applied to fitted sigmas
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_floor: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PropagateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    /// CSV (system,mean,variance) or JSON list of {system, mean, variance}
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub systems: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GofDriver {
    Matching,
    Similarity,
}

#[derive(Debug, Args, Serialize)]
pub struct GofArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<GofDriver>,
    /// Set sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDriver {
    Sensitivity,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VaryArg {
    N,
    Delta,
    SigmaSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelsArg {
    N,
    Sigma,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<SweepDriver>,
    /// Parameter varied by the sensitivity driver
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vary: Option<VaryArg>,
    /// Grid of the varied parameter, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_delta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_sigma_sq: Option<f64>,
    /// Second axis of the error driver
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelsArg>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_levels: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_levels: Option<Vec<f64>>,
    /// Set size for sigma levels
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrmseDriver {
    Simulate,
    Compare,
}

#[derive(Debug, Args, Serialize)]
pub struct SrmseArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<SrmseDriver>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long = "srmse-normalize")]
    #[serde(rename = "normalization", skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    /// Drop trials with no kept pair instead of scoring them 0
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub exclude_empty: bool,
    /// Set size for the comparison driver
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// ratings.csv (user_id,item_id,trial,rating)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    /// Extra systems as NAME=predictions.csv; R1, R2 and R3 are always included
    #[arg(long = "system", value_name = "NAME=PATH")]
    #[serde(rename = "systems", skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_floor: Option<f64>,
    /// Score only trials shared by every pair
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub common_trials: bool,
    /// Also write fitted models to this path
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models_out: Option<PathBuf>,
    /// Also write per-trial scores to this path
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}
