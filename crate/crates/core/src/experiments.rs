//! Synthetic evaluation sets and the experiment drivers built on them.
//!
//! Every driver is a deterministic function of its configuration and seed.
//! Sub-seeds for individual sets and simulations come from
//! [`trial_seed`](crate::mc::trial_seed), so results do not depend on the
//! number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{EvaluationSet, MetricDistribution};
use crate::error::{invalid, Error, Result};
use crate::gof::{linear_regression, sample_vs_gaussian_njsd, RegressionResult, DEFAULT_BINS};
use crate::mc::{fit_gaussian, simulate_metric, trial_rng, trial_seed, Metric};
use crate::propagate::rmse_distribution;
use crate::ranking::error_probability;
use crate::srmse::{paired_simulate, Normalization, SrmseConfig};

/// Ranges for the per-pair deviation and feedback variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthBounds {
    pub delta_range: (f64, f64),
    pub sigma_sq_range: (f64, f64),
}

impl Default for SynthBounds {
    fn default() -> Self {
        Self { delta_range: (0.0, 4.0), sigma_sq_range: (0.16, 3.86) }
    }
}

impl SynthBounds {
    pub fn new(delta_range: (f64, f64), sigma_sq_range: (f64, f64)) -> Result<Self> {
        let b = Self { delta_range, sigma_sq_range };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.delta_range) {
            return Err(invalid("delta range must be finite with lower <= upper"));
        }
        if !ok(self.sigma_sq_range) || self.sigma_sq_range.0 < 0.0 {
            return Err(invalid("sigma^2 range must be finite, non-negative, with lower <= upper"));
        }
        Ok(())
    }
}

fn uniform_in<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.gen::<f64>()
    }
}

/// `n` pairs with deviation and variance drawn uniformly from `bounds`.
pub fn sample_pairs(n: usize, bounds: &SynthBounds, seed: u64) -> Result<EvaluationSet> {
    if n == 0 {
        return Err(Error::Empty("sample_pairs needs n >= 1"));
    }
    bounds.validate()?;
    let mut rng = trial_rng(seed, 0);
    let mut deltas = Vec::with_capacity(n);
    let mut sigma_sq = Vec::with_capacity(n);
    for _ in 0..n {
        deltas.push(uniform_in(&mut rng, bounds.delta_range));
        sigma_sq.push(uniform_in(&mut rng, bounds.sigma_sq_range));
    }
    EvaluationSet::from_deviations(&deltas, &sigma_sq)
}

/// `n` variances drawn uniformly from `range`.
fn sample_sigma_sq(n: usize, range: (f64, f64), seed: u64) -> Vec<f64> {
    let mut rng = trial_rng(seed, 0);
    (0..n).map(|_| uniform_in(&mut rng, range)).collect()
}

/// `lo, lo + step, ...` up to and including `hi` (within rounding).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + i as f64 * step).collect()
}

/// `{50, 250, 500, ..., 2500}`.
pub fn default_n_grid() -> Vec<usize> {
    std::iter::once(50).chain((1..=10).map(|i| 250 * i)).collect()
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("quartiles of an empty list"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "value", index });
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let i = h.floor() as usize;
            let j = (i + 1).min(v.len() - 1);
            v[i] + (h - i as f64) * (v[j] - v[i])
        };
        Ok(Self { min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub tau: usize,
    pub bins: usize,
    pub bounds: SynthBounds,
    pub seed: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            n_grid: default_n_grid(),
            reps: 10,
            tau: 20_000,
            bins: DEFAULT_BINS,
            bounds: SynthBounds::default(),
            seed: 42,
        }
    }
}

/// Analytic and simulated RMSE distribution of one synthetic set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingPoint {
    pub n: usize,
    pub rep: usize,
    pub mu_apr: f64,
    pub var_apr: f64,
    pub mu_sim: f64,
    pub var_sim: f64,
    /// Absent when the analytic variance is zero.
    pub njsd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingStudy {
    pub points: Vec<MatchingPoint>,
    pub mean_fit: RegressionResult,
    pub variance_fit: RegressionResult,
    pub njsd_summary: Option<Quartiles>,
}

fn matching_points(config: &MatchingConfig) -> Result<Vec<MatchingPoint>> {
    if config.reps < 2 {
        return Err(invalid("reps must be at least 2"));
    }
    if config.n_grid.is_empty() {
        return Err(Error::Empty("n grid"));
    }
    let mut points = Vec::with_capacity(config.n_grid.len() * config.reps);
    for (gi, &n) in config.n_grid.iter().enumerate() {
        for rep in 0..config.reps {
            let k = (gi * config.reps + rep) as u64;
            let set = sample_pairs(n, &config.bounds, trial_seed(config.seed, 2 * k))?;
            let apr = rmse_distribution(&set);
            let sim = simulate_metric(&set, Metric::Rmse, config.tau, trial_seed(config.seed, 2 * k + 1))?;
            let fit = fit_gaussian(&sim)?;
            let njsd = if apr.variance > 0.0 {
                Some(sample_vs_gaussian_njsd(&sim, &apr, config.bins)?)
            } else {
                None
            };
            points.push(MatchingPoint {
                n,
                rep,
                mu_apr: apr.mean,
                var_apr: apr.variance,
                mu_sim: fit.mean,
                var_sim: fit.variance,
                njsd,
            });
        }
    }
    Ok(points)
}

/// Runs the matching study once and summarises both the regressions and the
/// nJSD values.
pub fn matching_study(config: &MatchingConfig) -> Result<MatchingStudy> {
    let points = matching_points(config)?;
    let means: Vec<(f64, f64)> = points.iter().map(|p| (p.mu_apr, p.mu_sim)).collect();
    let vars: Vec<(f64, f64)> = points.iter().map(|p| (p.var_apr, p.var_sim)).collect();
    let mean_fit = linear_regression(&means)?;
    let variance_fit = match linear_regression(&vars) {
        Ok(r) => r,
        // all analytic variances equal (e.g. zero-uncertainty bounds)
        Err(Error::InvalidArgument(_)) => RegressionResult { slope: f64::NAN, intercept: f64::NAN, r_squared: f64::NAN },
        Err(e) => return Err(e),
    };
    let njsd: Vec<f64> = points.iter().filter_map(|p| p.njsd).collect();
    let njsd_summary = if njsd.is_empty() { None } else { Some(Quartiles::from_values(&njsd)?) };
    Ok(MatchingStudy { points, mean_fit, variance_fit, njsd_summary })
}

/// Regressions of simulated on analytic mean and variance.
pub fn parameter_matching(config: &MatchingConfig) -> Result<(Vec<MatchingPoint>, RegressionResult, RegressionResult)> {
    let s = matching_study(config)?;
    Ok((s.points, s.mean_fit, s.variance_fit))
}

/// nJSD of every simulated sample against its analytic Gaussian.
pub fn distribution_similarity(config: &MatchingConfig) -> Result<(Vec<f64>, Quartiles)> {
    let s = matching_study(config)?;
    let summary = s.njsd_summary.ok_or(Error::Empty("no set with positive analytic variance"))?;
    Ok((s.points.iter().filter_map(|p| p.njsd).collect(), summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Varied {
    N,
    Delta,
    SigmaSq,
}

/// Values for the parameters that are not swept. `None` samples the
/// parameter per pair from the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub n: usize,
    pub delta: Option<f64>,
    pub sigma_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub varied: Varied,
    pub grid: Vec<f64>,
    pub fixed: FixedParams,
    pub replications: usize,
    pub bounds: SynthBounds,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Empty("sweep grid"));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) || self.grid.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep grid must be finite and strictly ascending"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        match self.varied {
            Varied::N if self.grid.iter().any(|&v| v < 1.0 || v.fract() != 0.0) => {
                return Err(invalid("an N grid must hold positive integers"))
            }
            Varied::SigmaSq if self.grid[0] < 0.0 => return Err(invalid("sigma^2 grid must be non-negative")),
            Varied::Delta | Varied::SigmaSq if self.fixed.n == 0 => return Err(invalid("fixed n must be at least 1")),
            _ => {}
        }
        self.bounds.validate()
    }
}

/// Analytic RMSE distribution at one grid value, averaged over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    pub variance: f64,
    pub variance_min: f64,
    pub variance_max: f64,
}

fn envelope(xs: &[f64]) -> (f64, f64, f64) {
    let avg = xs.iter().sum::<f64>() / xs.len() as f64;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (avg, lo, hi)
}

/// Analytic RMSE mean and variance as one parameter varies over its grid.
pub fn sensitivity_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.grid
        .par_iter()
        .enumerate()
        .map(|(gi, &value)| {
            let mut means = Vec::with_capacity(spec.replications);
            let mut vars = Vec::with_capacity(spec.replications);
            for rep in 0..spec.replications {
                let n = if spec.varied == Varied::N { value as usize } else { spec.fixed.n };
                let pick = |v: Varied, fixed: Option<f64>| if spec.varied == v { Some(value) } else { fixed };
                let bounds = SynthBounds {
                    delta_range: pick(Varied::Delta, spec.fixed.delta).map_or(spec.bounds.delta_range, |d| (d, d)),
                    sigma_sq_range: pick(Varied::SigmaSq, spec.fixed.sigma_sq)
                        .map_or(spec.bounds.sigma_sq_range, |s| (s, s)),
                };
                let set = sample_pairs(n, &bounds, trial_seed(spec.seed, (gi * spec.replications + rep) as u64))?;
                let d = rmse_distribution(&set);
                means.push(d.mean);
                vars.push(d.variance);
            }
            let (mean, mean_min, mean_max) = envelope(&means);
            let (variance, variance_min, variance_max) = envelope(&vars);
            Ok(SweepRow { value, mean, mean_min, mean_max, variance, variance_min, variance_max })
        })
        .collect()
}

/// Ratio of the better system's analytic RMSE mean to the worse one's.
pub const DEFAULT_RATIO: f64 = 0.9;
const RATIO_TOL: f64 = 1e-8;

/// Two systems on the same pairs: `worse` has every deviation equal to
/// `delta`, `better` scales them by `scale` so its analytic RMSE mean is
/// `ratio` times that of `worse`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemPair {
    pub worse: EvaluationSet,
    pub better: EvaluationSet,
    pub scale: f64,
}

/// Builds the constant-ratio system pair, or `Error::Unreachable` when even
/// a perfect scale of 0 leaves the better system above the target.
pub fn ratio_pair(delta: f64, sigma_sq: &[f64], ratio: f64) -> Result<SystemPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    let n = sigma_sq.len();
    let build = |c: f64| EvaluationSet::from_deviations(&vec![c * delta; n], sigma_sq);
    let worse = build(1.0)?;
    let target = ratio * rmse_distribution(&worse).mean;
    let mean_at = |c: f64| build(c).map(|s| rmse_distribution(&s).mean);
    if mean_at(0.0)? > target {
        return Err(Error::Unreachable(format!(
            "no scale reaches ratio {ratio} at delta {delta}: uncertainty alone exceeds the target"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut c = 0.5;
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let m = mean_at(c)?;
        if ((m - target) / target).abs() <= RATIO_TOL {
            break;
        }
        if m < target {
            lo = c;
        } else {
            hi = c;
        }
    }
    Ok(SystemPair { worse, better: build(c)?, scale: c })
}

fn pair_error(pair: &SystemPair) -> f64 {
    error_probability(&rmse_distribution(&pair.better), &rmse_distribution(&pair.worse))
}

/// Second axis of an error-probability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLevels {
    /// Set sizes, with variances sampled from the bounds.
    SampleSize(Vec<usize>),
    /// Fixed per-pair variances at a single set size.
    SigmaSq { n: usize, levels: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweepConfig {
    pub delta_grid: Vec<f64>,
    pub levels: ErrorLevels,
    pub bounds: SynthBounds,
    pub replications: usize,
    pub ratio: f64,
    pub seed: u64,
}

impl Default for ErrorSweepConfig {
    fn default() -> Self {
        Self {
            delta_grid: linear_grid(0.0, 4.0, 0.1),
            levels: ErrorLevels::SampleSize(vec![50, 100, 250, 500, 1000, 2500]),
            bounds: SynthBounds::default(),
            replications: 20,
            ratio: DEFAULT_RATIO,
            seed: 42,
        }
    }
}

impl ErrorSweepConfig {
    /// Low, middle and high variance levels at `n` pairs.
    pub fn sigma_levels(n: usize) -> Self {
        let (lo, hi) = SynthBounds::default().sigma_sq_range;
        Self { levels: ErrorLevels::SigmaSq { n, levels: vec![lo, 0.5 * (lo + hi), hi] }, ..Self::default() }
    }
}

/// Error probability at one `(delta, level)` point, averaged over the
/// replications in which the target ratio was reachable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub delta: f64,
    pub level: f64,
    pub reachable: usize,
    pub error: Option<f64>,
    pub error_min: Option<f64>,
    pub error_max: Option<f64>,
}

/// Pairwise ranking error of two systems whose analytic RMSE means differ by
/// a constant ratio, over a grid of deviations and set sizes or variances.
pub fn error_probability_sweep(config: &ErrorSweepConfig) -> Result<Vec<ErrorRow>> {
    if config.delta_grid.is_empty() {
        return Err(Error::Empty("delta grid"));
    }
    if config.replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    config.bounds.validate()?;
    let points: Vec<(usize, f64, usize, Option<f64>)> = match &config.levels {
        ErrorLevels::SampleSize(ns) if ns.is_empty() => return Err(Error::Empty("n levels")),
        ErrorLevels::SigmaSq { levels, .. } if levels.is_empty() => return Err(Error::Empty("sigma^2 levels")),
        ErrorLevels::SampleSize(ns) => ns.iter().enumerate().map(|(i, &n)| (i, n as f64, n, None)).collect(),
        ErrorLevels::SigmaSq { n, levels } => levels.iter().enumerate().map(|(i, &s)| (i, s, *n, Some(s))).collect(),
    };
    if points.iter().any(|p| p.2 == 0) {
        return Err(invalid("set size must be at least 1"));
    }
    let jobs: Vec<(usize, f64, f64, usize, Option<f64>)> = points
        .iter()
        .flat_map(|&(li, level, n, s)| config.delta_grid.iter().map(move |&d| (li, level, d, n, s)))
        .collect();
    jobs.par_iter()
        .map(|&(li, level, delta, n, fixed)| {
            let mut errors = Vec::with_capacity(config.replications);
            for rep in 0..config.replications {
                let sigma_sq = match fixed {
                    Some(s) => vec![s; n],
                    None => {
                        let k = (li * config.replications + rep) as u64;
                        sample_sigma_sq(n, config.bounds.sigma_sq_range, trial_seed(config.seed, k))
                    }
                };
                match ratio_pair(delta, &sigma_sq, config.ratio) {
                    Ok(pair) => errors.push(pair_error(&pair)),
                    Err(Error::Unreachable(_)) => {}
                    Err(e) => return Err(e),
                }
                if fixed.is_some() {
                    // nothing random to replicate
                    errors.truncate(1);
                    break;
                }
            }
            let reachable = errors.len();
            let (error, error_min, error_max) = if errors.is_empty() {
                (None, None, None)
            } else {
                let (a, lo, hi) = envelope(&errors);
                (Some(a), Some(lo), Some(hi))
            };
            Ok(ErrorRow { delta, level, reachable, error, error_min, error_max })
        })
        .collect()
}

/// Smallest grid deviation at `level` whose error is below `threshold`.
pub fn crossing(rows: &[ErrorRow], level: f64, threshold: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.level == level)
        .filter(|r| r.error.is_some_and(|e| e < threshold))
        .map(|r| r.delta)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmseComparisonConfig {
    pub n: usize,
    pub alpha: f64,
    pub tau: usize,
    pub delta_grid: Vec<f64>,
    pub normalization: Normalization,
    pub bounds: SynthBounds,
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SrmseComparisonConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            alpha: 0.05,
            tau: 20_000,
            delta_grid: linear_grid(0.0, 4.0, 0.25),
            normalization: Normalization::Kept,
            bounds: SynthBounds::default(),
            ratio: DEFAULT_RATIO,
            seed: 42,
        }
    }
}

/// RMSE and sRMSE ranking errors of one system pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub delta: f64,
    pub scale: Option<f64>,
    pub error_rmse: Option<f64>,
    pub error_srmse: Option<f64>,
}

/// Error of ordering two fitted distributions by their own means.
fn ordered_error(a: &MetricDistribution, b: &MetricDistribution) -> f64 {
    if a.mean <= b.mean {
        error_probability(a, b)
    } else {
        error_probability(b, a)
    }
}

/// Ranking error under RMSE and sRMSE for the constant-ratio system pair,
/// both fitted from Monte-Carlo samples of the same draws.
pub fn srmse_error_comparison(config: &SrmseComparisonConfig) -> Result<Vec<ComparisonRow>> {
    if config.n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if config.delta_grid.is_empty() {
        return Err(Error::Empty("delta grid"));
    }
    config.bounds.validate()?;
    let sigma_sq = sample_sigma_sq(config.n, config.bounds.sigma_sq_range, trial_seed(config.seed, 0));
    let srmse = SrmseConfig { alpha: config.alpha, normalization: config.normalization, exclude_empty: false };
    let mc_seed = trial_seed(config.seed, 1);
    let mut rows = Vec::with_capacity(config.delta_grid.len());
    for &delta in &config.delta_grid {
        let pair = match ratio_pair(delta, &sigma_sq, config.ratio) {
            Ok(p) => p,
            Err(Error::Unreachable(_)) => {
                rows.push(ComparisonRow { delta, scale: None, error_rmse: None, error_srmse: None });
                continue;
            }
            Err(e) => return Err(e),
        };
        let a = paired_simulate(&pair.better, &srmse, config.tau, mc_seed)?;
        let b = paired_simulate(&pair.worse, &srmse, config.tau, mc_seed)?;
        let error_rmse = ordered_error(&fit_gaussian(&a.rmse)?, &fit_gaussian(&b.rmse)?);
        let error_srmse = ordered_error(&fit_gaussian(&a.srmse)?, &fit_gaussian(&b.srmse)?);
        rows.push(ComparisonRow {
            delta,
            scale: Some(pair.scale),
            error_rmse: Some(error_rmse),
            error_srmse: Some(error_srmse),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_pairs_respect_bounds_and_seed() {
        let b = SynthBounds::default();
        let set = sample_pairs(500, &b, 3).unwrap();
        for p in set.pairs() {
            let d = p.delta();
            assert!((0.0..=4.0).contains(&d));
            assert!((0.16..=3.86).contains(&p.feedback.variance()) || (p.feedback.variance() - 3.86).abs() < 1e-12);
        }
        assert_eq!(set, sample_pairs(500, &b, 3).unwrap());
        assert_ne!(set, sample_pairs(500, &b, 4).unwrap());
    }

    #[test]
    fn sampled_delta_mean() {
        let set = sample_pairs(10_000, &SynthBounds::default(), 8).unwrap();
        let mean = set.deltas().sum::<f64>() / 10_000.0;
        assert!((mean - 2.0).abs() < 0.04, "{mean}");
    }

    #[test]
    fn bounds_validation() {
        assert!(SynthBounds::new((1.0, 0.0), (0.16, 3.86)).is_err());
        assert!(SynthBounds::new((0.0, 4.0), (-0.1, 1.0)).is_err());
        assert!(sample_pairs(0, &SynthBounds::default(), 1).is_err());
    }

    #[test]
    fn grids() {
        let g = linear_grid(0.0, 4.0, 0.25);
        assert_eq!(g.len(), 17);
        assert_eq!(g[16], 4.0);
        assert_eq!(linear_grid(0.0, 4.0, 0.1).len(), 41);
        assert_eq!(default_n_grid(), vec![50, 250, 500, 750, 1000, 1250, 1500, 1750, 2000, 2250, 2500]);
    }

    #[test]
    fn quartile_examples() {
        let q = Quartiles::from_values(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let q = Quartiles::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
        assert!(Quartiles::from_values(&[]).is_err());
    }

    #[test]
    fn zero_uncertainty_matching_is_exact() {
        let config = MatchingConfig {
            n_grid: vec![5, 20],
            reps: 3,
            tau: 10,
            bounds: SynthBounds::new((0.0, 4.0), (0.0, 0.0)).unwrap(),
            ..MatchingConfig::default()
        };
        let s = matching_study(&config).unwrap();
        for p in &s.points {
            assert!((p.mu_sim - p.mu_apr).abs() < 1e-12);
            assert_eq!(p.njsd, None);
        }
        assert!((s.mean_fit.slope - 1.0).abs() < 1e-9);
        assert!(s.mean_fit.intercept.abs() < 1e-9);
        assert!(s.njsd_summary.is_none());
    }

    #[test]
    fn matching_needs_two_reps() {
        let config = MatchingConfig { reps: 1, ..MatchingConfig::default() };
        assert!(matching_study(&config).is_err());
    }

    fn sweep(varied: Varied, grid: Vec<f64>, fixed: FixedParams) -> Vec<SweepRow> {
        let spec = SweepSpec { varied, grid, fixed, replications: 5, bounds: SynthBounds::default(), seed: 9 };
        sensitivity_sweep(&spec).unwrap()
    }

    #[test]
    fn mean_is_flat_in_n() {
        let rows = sweep(
            Varied::N,
            vec![10.0, 100.0, 1000.0],
            FixedParams { n: 0, delta: Some(1.5), sigma_sq: Some(0.8) },
        );
        for r in &rows {
            assert!((r.mean - rows[0].mean).abs() < 1e-12);
            assert_eq!(r.mean_min, r.mean_max);
        }
        assert!((rows[0].variance / rows[2].variance - 100.0).abs() < 1e-9);
    }

    #[test]
    fn mean_approaches_delta() {
        let rows = sweep(
            Varied::Delta,
            linear_grid(0.0, 4.0, 0.5),
            FixedParams { n: 100, delta: None, sigma_sq: Some(0.16) },
        );
        let last = rows.last().unwrap();
        assert!(last.mean > 4.0 && last.mean - 4.0 < 0.03);
        assert!(rows.windows(2).all(|w| w[0].mean < w[1].mean));
    }

    #[test]
    fn sampled_parameters_give_a_band() {
        let rows = sweep(Varied::SigmaSq, vec![0.5, 1.0], FixedParams { n: 20, delta: None, sigma_sq: None });
        assert!(rows.iter().all(|r| r.mean_min < r.mean_max && r.mean_min <= r.mean && r.mean <= r.mean_max));
    }

    #[test]
    fn sweep_spec_validation() {
        let fixed = FixedParams { n: 10, delta: None, sigma_sq: None };
        let mut spec = SweepSpec {
            varied: Varied::Delta,
            grid: vec![1.0, 0.5],
            fixed,
            replications: 1,
            bounds: SynthBounds::default(),
            seed: 1,
        };
        assert!(sensitivity_sweep(&spec).is_err());
        spec.grid = vec![0.5, 1.0];
        spec.replications = 0;
        assert!(sensitivity_sweep(&spec).is_err());
        spec.replications = 1;
        spec.varied = Varied::N;
        spec.grid = vec![1.5];
        assert!(sensitivity_sweep(&spec).is_err());
    }

    #[test]
    fn ratio_pair_hits_the_target() {
        let sigma_sq = vec![0.5, 1.0, 2.0];
        let p = ratio_pair(3.0, &sigma_sq, 0.9).unwrap();
        let ratio = rmse_distribution(&p.better).mean / rmse_distribution(&p.worse).mean;
        assert!((ratio - 0.9).abs() < 1e-8);
        assert!(p.scale > 0.0 && p.scale < 1.0);
        assert!(matches!(ratio_pair(0.0, &sigma_sq, 0.9), Err(Error::Unreachable(_))));
        assert!(matches!(ratio_pair(0.1, &sigma_sq, 0.9), Err(Error::Unreachable(_))));
    }

    #[test]
    fn error_falls_with_n() {
        let config = ErrorSweepConfig {
            delta_grid: vec![2.0, 3.0, 4.0],
            levels: ErrorLevels::SampleSize(vec![50, 100, 1000]),
            replications: 3,
            ..ErrorSweepConfig::default()
        };
        let rows = error_probability_sweep(&config).unwrap();
        for &d in &config.delta_grid {
            let e: Vec<f64> = rows.iter().filter(|r| r.delta == d).map(|r| r.error.unwrap()).collect();
            assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        }
    }

    #[test]
    fn sigma_levels_are_deterministic() {
        let mut config = ErrorSweepConfig::sigma_levels(1000);
        config.delta_grid = vec![2.0, 4.0];
        let rows = error_probability_sweep(&config).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.reachable == 1 && r.error_min == r.error_max));
        assert_eq!(rows, error_probability_sweep(&config).unwrap());
    }

    #[test]
    fn unreachable_points_are_reported() {
        let config = ErrorSweepConfig {
            delta_grid: vec![0.0],
            levels: ErrorLevels::SampleSize(vec![10]),
            replications: 2,
            ..ErrorSweepConfig::default()
        };
        let rows = error_probability_sweep(&config).unwrap();
        assert_eq!((rows[0].reachable, rows[0].error), (0, None));
    }

    #[test]
    fn filter_off_comparison_has_identical_curves() {
        let config = SrmseComparisonConfig {
            n: 50,
            alpha: 1.0,
            tau: 300,
            delta_grid: vec![0.0, 2.0, 4.0],
            ..SrmseComparisonConfig::default()
        };
        let rows = srmse_error_comparison(&config).unwrap();
        assert_eq!(rows[0].error_rmse, None);
        for r in &rows[1..] {
            assert_eq!(r.error_rmse, r.error_srmse);
            assert!(r.error_rmse.is_some());
        }
    }
}
