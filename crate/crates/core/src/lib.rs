//! Evaluation metrics as distributions: propagating rating uncertainty into
//! error metrics, ranking systems under that uncertainty, and checking the
//! Gaussian approximation against Monte-Carlo simulation.

pub mod domain;
pub mod error;
pub mod experiments;
pub mod gof;
pub mod ingest;
pub mod mc;
pub mod normal;
pub mod propagate;
pub mod ranking;
pub mod srmse;

pub use domain::{make_evaluation_set, EmpiricalDistribution, EvaluationSet, FeedbackModel, MetricDistribution, Pair};
pub use error::{Error, Result};
pub use gof::{kl_divergence, linear_regression, njsd, RegressionResult};
pub use ingest::{baseline_predictor, fit_feedback_models, parse_ratings_csv, per_trial_scores, Predictor, RepeatedRatings};
pub use mc::{fit_gaussian, simulate_metric, to_histogram, Histogram, Metric};
pub use propagate::{mse_distribution, rmse_distribution};
pub use ranking::{error_probability, rank_systems, ranking_frequencies, RankingFrequency, RankingReport};
pub use srmse::{significance_interval, srmse_distribution, srmse_simulate, SignificanceInterval, SrmseConfig};
