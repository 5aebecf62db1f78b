//! Seeded Monte-Carlo convolution of metric distributions.
//!
//! Trial `t` draws from its own generator seeded by a hash of `(seed, t)`, and
//! each outcome consumes exactly one uniform, pushed through the normal
//! quantile function. Trials can therefore run on any number of workers and
//! are always collected in trial order.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{EmpiricalDistribution, EvaluationSet, FeedbackModel, MetricDistribution};
use crate::error::{invalid, Error, Result};
use crate::normal;

/// Point metrics that can be simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Rmse,
    Mae,
}

impl Metric {
    /// Metric value of a list of deviations.
    pub fn score<I: IntoIterator<Item = f64>>(self, deviations: I) -> f64 {
        let mut acc = DeviationSums::default();
        for e in deviations {
            acc.push(e);
        }
        acc.finish(self)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Metric::Mse),
            "rmse" => Ok(Metric::Rmse),
            "mae" => Ok(Metric::Mae),
            other => Err(invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// Running sums over one trial's deviations, accumulated in pair order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct DeviationSums {
    pub n: usize,
    pub sq: f64,
    pub abs: f64,
}

impl DeviationSums {
    #[inline]
    pub fn push(&mut self, e: f64) {
        self.n += 1;
        self.sq += e * e;
        self.abs += e.abs();
    }

    #[inline]
    pub fn finish(&self, metric: Metric) -> f64 {
        let n = self.n as f64;
        match metric {
            Metric::Mse => self.sq / n,
            Metric::Rmse => (self.sq / n).sqrt(),
            Metric::Mae => self.abs / n,
        }
    }
}

/// Sub-seed for trial `t` (SplitMix64 finaliser over the combined input).
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `t` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, trial))
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw by inverse transform of one uniform.
#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal::quantile(uniform_open(rng))
}

/// One outcome of `model`; a point mass returns `mu` exactly.
#[inline]
pub fn sample_outcome<R: RngCore + ?Sized>(model: &FeedbackModel, rng: &mut R) -> f64 {
    let z = standard_normal(rng);
    if model.is_point_mass() {
        model.mu()
    } else {
        model.mu() + model.sigma() * z
    }
}

/// Runs `tau` independent trials and returns their results in trial order.
pub fn run_trials<T, F>(tau: usize, seed: u64, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..tau as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            trial(&mut rng)
        })
        .collect()
}

/// Monte-Carlo sample of `metric` over `tau` trials.
pub fn simulate_metric(set: &EvaluationSet, metric: Metric, tau: usize, seed: u64) -> Result<EmpiricalDistribution> {
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    let samples = run_trials(tau, seed, |rng| {
        let mut acc = DeviationSums::default();
        for p in set.pairs() {
            acc.push(sample_outcome(&p.feedback, rng) - p.prediction);
        }
        acc.finish(metric)
    });
    EmpiricalDistribution::new(samples, seed)
}

/// Maximum-likelihood Gaussian fit: sample mean and variance divided by `tau`.
pub fn fit_gaussian(samples: &EmpiricalDistribution) -> Result<MetricDistribution> {
    fit_samples(samples.samples())
}

pub fn fit_samples(samples: &[f64]) -> Result<MetricDistribution> {
    if samples.len() < 2 {
        return Err(Error::Insufficient(format!(
            "a Gaussian fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    MetricDistribution::new(mean, variance)
}

/// Binned probability mass over ascending edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    mass: Vec<f64>,
}

impl Histogram {
    /// Normalises `weights` into a histogram over `edges`.
    ///
    /// A single bin of zero width (`edges == [v, v]`) is accepted as the
    /// degenerate histogram of a constant sample.
    pub fn from_weights(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || weights.len() + 1 != edges.len() {
            return Err(invalid("histogram needs bins + 1 edges"));
        }
        let degenerate = edges.len() == 2 && edges[0] == edges[1];
        if !degenerate && edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("histogram edges must be strictly ascending"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("histogram weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("histogram has no mass"));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        Ok(Self { edges, mass })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }
}

/// `bins + 1` equal-width edges from `lo` to `hi`.
pub fn equal_width_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    edges
}

/// Counts `samples` into the bins of `edges`; the last bin is closed on the
/// right. Samples outside the edges are an error.
pub fn histogram_on_edges(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 {
        return Err(invalid("need at least two edges"));
    }
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0.0; bins];
    for &x in samples {
        if !(lo..=hi).contains(&x) {
            return Err(invalid(format!("sample {x} outside [{lo}, {hi}]")));
        }
        // partition_point gives the first edge strictly greater than x
        let idx = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
        counts[idx] += 1.0;
    }
    Histogram::from_weights(edges.to_vec(), counts)
}

/// Equal-width histogram spanning `[min, max]` of the samples.
pub fn to_histogram(samples: &EmpiricalDistribution, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(invalid("bins must be at least 2"));
    }
    let xs = samples.samples();
    if xs.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Histogram::from_weights(vec![lo, hi], vec![1.0]);
    }
    histogram_on_edges(xs, &equal_width_edges(lo, hi, bins))
}
