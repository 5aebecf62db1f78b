//! The significance-filtered RMSE (sRMSE).
//!
//! Each pair gets an acceptance interval `[prediction - a, prediction + a]`
//! holding `1 - alpha` of its feedback density. A simulated outcome counts
//! towards the score only when it falls outside that interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{EmpiricalDistribution, EvaluationSet, FeedbackModel, MetricDistribution};
use crate::error::{invalid, Error, Result};
use crate::mc::{fit_gaussian, run_trials, sample_outcome};
use crate::normal;

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Levels at or above this disable the filter entirely.
pub const FILTER_OFF_ALPHA: f64 = 1.0 - 1e-12;

/// Acceptance interval `[center - half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceInterval {
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
}

impl SignificanceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// True when `x` lies outside the closed interval.
    #[inline]
    pub fn rejects(&self, x: f64) -> bool {
        (x - self.center).abs() > self.half_width
    }
}

fn mass_around(model: &FeedbackModel, center: f64, a: f64) -> f64 {
    let s = model.sigma();
    normal::interval_mass((center - a - model.mu()) / s, (center + a - model.mu()) / s)
}

/// Half-width `a` with `P(|X - prediction| <= a) = 1 - alpha` under the model.
fn half_width(model: &FeedbackModel, prediction: f64, alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    let z = normal::quantile(1.0 - alpha / 2.0);
    let mut lo = 0.0_f64;
    let mut hi = (model.mu() - prediction).abs() + model.sigma() * z;
    // widen in case rounding left the bracket short
    while mass_around(model, prediction, hi) < target {
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_around(model, prediction, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Acceptance interval for one pair at level `alpha`.
pub fn significance_interval(model: &FeedbackModel, prediction: f64, alpha: f64) -> Result<SignificanceInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !prediction.is_finite() {
        return Err(Error::NonFinite { what: "prediction", index: 0 });
    }
    if model.is_point_mass() {
        return Err(invalid("a point-mass feedback model has no acceptance interval"));
    }
    Ok(SignificanceInterval {
        center: prediction,
        half_width: half_width(model, prediction, alpha),
        alpha,
    })
}

/// Divisor applied to the kept squared deviations of a trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Number of kept pairs.
    #[default]
    Kept,
    /// Number of pairs in the set.
    All,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Kept => "kept",
            Normalization::All => "all",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kept" => Ok(Normalization::Kept),
            "all" => Ok(Normalization::All),
            other => Err(invalid(format!("unknown normalization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrmseConfig {
    pub alpha: f64,
    pub normalization: Normalization,
    /// Drop trials in which no pair was kept instead of scoring them 0.
    pub exclude_empty: bool,
}

impl Default for SrmseConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, normalization: Normalization::Kept, exclude_empty: false }
    }
}

impl SrmseConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Per-pair half-widths; point masses get 0, and the filter-off level gives
/// `None` so every draw is kept.
fn half_widths(set: &EvaluationSet, alpha: f64) -> Option<Vec<f64>> {
    if alpha >= FILTER_OFF_ALPHA {
        return None;
    }
    Some(
        set.pairs()
            .iter()
            .map(|p| {
                if p.feedback.is_point_mass() {
                    0.0
                } else {
                    half_width(&p.feedback, p.prediction, alpha)
                }
            })
            .collect(),
    )
}

/// RMSE and sRMSE of one trial's draws.
struct TrialScores {
    rmse: f64,
    srmse: Option<f64>,
}

fn simulate_paired(set: &EvaluationSet, config: &SrmseConfig, tau: usize, seed: u64) -> Result<Vec<TrialScores>> {
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    config.validate()?;
    let widths = half_widths(set, config.alpha);
    let n = set.len() as f64;
    Ok(run_trials(tau, seed, |rng| {
        let (mut sq_all, mut sq_kept, mut kept) = (0.0, 0.0, 0usize);
        for (i, p) in set.pairs().iter().enumerate() {
            let e = sample_outcome(&p.feedback, rng) - p.prediction;
            sq_all += e * e;
            if widths.as_ref().map_or(true, |w| e.abs() > w[i]) {
                sq_kept += e * e;
                kept += 1;
            }
        }
        let srmse = if kept == 0 {
            (!config.exclude_empty).then_some(0.0)
        } else {
            let denom = match config.normalization {
                Normalization::Kept => kept as f64,
                Normalization::All => n,
            };
            Some((sq_kept / denom).sqrt())
        };
        TrialScores { rmse: (sq_all / n).sqrt(), srmse }
    }))
}

/// Monte-Carlo sample of the sRMSE under `config`.
pub fn srmse_simulate_with(set: &EvaluationSet, config: &SrmseConfig, tau: usize, seed: u64) -> Result<EmpiricalDistribution> {
    let trials = simulate_paired(set, config, tau, seed)?;
    EmpiricalDistribution::new(trials.into_iter().filter_map(|t| t.srmse).collect(), seed)
}

/// Monte-Carlo sample of the sRMSE at level `alpha`, default normalization.
pub fn srmse_simulate(set: &EvaluationSet, alpha: f64, tau: usize, seed: u64) -> Result<EmpiricalDistribution> {
    srmse_simulate_with(set, &SrmseConfig::with_alpha(alpha), tau, seed)
}

/// Gaussian fit of [`srmse_simulate`].
pub fn srmse_distribution(set: &EvaluationSet, alpha: f64, tau: usize, seed: u64) -> Result<MetricDistribution> {
    fit_gaussian(&srmse_simulate(set, alpha, tau, seed)?)
}

/// RMSE and sRMSE samples computed from the same draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub rmse: EmpiricalDistribution,
    pub srmse: EmpiricalDistribution,
}

pub fn paired_simulate(set: &EvaluationSet, config: &SrmseConfig, tau: usize, seed: u64) -> Result<PairedSamples> {
    let trials = simulate_paired(set, config, tau, seed)?;
    let rmse = trials.iter().map(|t| t.rmse).collect();
    let srmse = trials.iter().filter_map(|t| t.srmse).collect();
    Ok(PairedSamples {
        rmse: EmpiricalDistribution::new(rmse, seed)?,
        srmse: EmpiricalDistribution::new(srmse, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{simulate_metric, Metric};

    fn fm(mu: f64, sigma: f64) -> FeedbackModel {
        FeedbackModel::new(mu, sigma).unwrap()
    }

    #[test]
    fn centred_interval_is_the_normal_quantile() {
        let iv = significance_interval(&fm(3.0, 0.5), 3.0, 0.05).unwrap();
        assert!((iv.half_width - 0.5 * 1.959_963_984_540_054).abs() < 1e-10);
        assert!((iv.half_width - 0.979982).abs() < 1e-6);
    }

    #[test]
    fn offset_interval() {
        let iv = significance_interval(&fm(4.0, 1.0), 3.0, 0.05).unwrap();
        assert!((iv.half_width - 2.646_145_548_215_298).abs() < 1e-9, "{}", iv.half_width);
        let mass = normal::cdf(iv.half_width - 1.0) - normal::cdf(-iv.half_width - 1.0);
        assert!((mass - 0.95).abs() < 1e-9);
    }

    #[test]
    fn interval_shrinks_as_alpha_grows() {
        let m = fm(2.0, 0.8);
        let a = |alpha| significance_interval(&m, 2.3, alpha).unwrap().half_width;
        assert!(a(0.01) > a(0.05) && a(0.05) > a(0.5) && a(0.5) > a(0.999));
        assert!(a(1.0 - 1e-9) < 1e-8);
    }

    #[test]
    fn interval_rejects_bad_input() {
        assert!(significance_interval(&fm(1.0, 0.0), 1.0, 0.05).is_err());
        assert!(significance_interval(&fm(1.0, 1.0), 1.0, 0.0).is_err());
        assert!(significance_interval(&fm(1.0, 1.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn filter_off_reproduces_rmse() {
        let set = EvaluationSet::new(&[fm(1.0, 0.4), fm(3.0, 0.0), fm(2.0, 1.3)], &[1.5, 3.0, 0.5]).unwrap();
        let rmse = simulate_metric(&set, Metric::Rmse, 500, 17).unwrap();
        let s = srmse_simulate(&set, FILTER_OFF_ALPHA, 500, 17).unwrap();
        assert_eq!(rmse.samples(), s.samples());
        let p = paired_simulate(&set, &SrmseConfig::with_alpha(0.05), 500, 17).unwrap();
        assert_eq!(rmse.samples(), p.rmse.samples());
    }

    #[test]
    fn point_masses_at_the_prediction_give_zero() {
        let set = EvaluationSet::new(&[fm(2.0, 0.0), fm(4.0, 0.0)], &[2.0, 4.0]).unwrap();
        let d = srmse_distribution(&set, 0.05, 20, 1).unwrap();
        assert_eq!((d.mean, d.variance), (0.0, 0.0));
        let cfg = SrmseConfig { exclude_empty: true, ..SrmseConfig::default() };
        assert!(srmse_simulate_with(&set, &cfg, 20, 1).unwrap().samples().is_empty());
    }

    #[test]
    fn point_masses_off_the_prediction_are_kept() {
        let set = EvaluationSet::new(&[fm(2.0, 0.0), fm(4.0, 0.0)], &[1.0, 4.0]).unwrap();
        let s = srmse_simulate(&set, 0.05, 5, 1).unwrap();
        assert!(s.samples().iter().all(|&x| x == 1.0));
        let cfg = SrmseConfig { normalization: Normalization::All, ..SrmseConfig::default() };
        let s = srmse_simulate_with(&set, &cfg, 5, 1).unwrap();
        assert!(s.samples().iter().all(|&x| x == 0.5_f64.sqrt()));
    }

    #[test]
    fn single_pair_tail_moment() {
        let set = EvaluationSet::new(&[fm(0.0, 1.0)], &[0.0]).unwrap();
        let s = srmse_simulate(&set, 0.05, 200_000, 5).unwrap();
        let nonzero: Vec<f64> = s.samples().iter().copied().filter(|&x| x > 0.0).collect();
        let share = nonzero.len() as f64 / s.tau() as f64;
        assert!((share - 0.05).abs() < 0.003, "{share}");
        assert!(nonzero.iter().all(|&x| x > 1.959_963));
        let m2 = nonzero.iter().map(|x| x * x).sum::<f64>() / nonzero.len() as f64;
        // E[X^2 | |X| > z_0.975] = 2 (z phi(z) + 0.025) / 0.05
        assert!((m2 - 5.582_009_275_671_951).abs() < 0.15, "{m2}");
    }

    #[test]
    fn zero_tau_and_bad_alpha_are_rejected() {
        let set = EvaluationSet::new(&[fm(0.0, 1.0)], &[0.0]).unwrap();
        assert!(srmse_simulate(&set, 0.05, 0, 1).is_err());
        assert!(srmse_simulate(&set, 0.0, 10, 1).is_err());
        assert!(srmse_simulate(&set, 1.5, 10, 1).is_err());
    }

    #[test]
    fn normalization_parses() {
        assert_eq!("kept".parse::<Normalization>().unwrap(), Normalization::Kept);
        assert_eq!("ALL".parse::<Normalization>().unwrap(), Normalization::All);
        assert!("n".parse::<Normalization>().is_err());
    }
}
