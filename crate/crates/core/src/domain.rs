//! Domain types shared by every module: feedback models, evaluation sets and
//! the two representations of a metric's outcome distribution.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Gaussian model of one user-item pair's feedback, `N(mu, sigma)`.
///
/// `sigma == 0` is a point mass (a rater who always answers the same).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackModel {
    mu: f64,
    sigma: f64,
}

impl FeedbackModel {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite { what: "mu", index: 0 });
        }
        if !sigma.is_finite() {
            return Err(Error::NonFinite { what: "sigma", index: 0 });
        }
        if sigma < 0.0 {
            return Err(invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn point_mass(mu: f64) -> Result<Self> {
        Self::new(mu, 0.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn is_point_mass(&self) -> bool {
        self.sigma == 0.0
    }
}

/// One evaluated pair: a feedback model and the system's prediction for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub feedback: FeedbackModel,
    pub prediction: f64,
}

impl Pair {
    /// Expected deviation `mu - prediction`.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.feedback.mu() - self.prediction
    }
}

/// Paired feedback models and predictions for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSet {
    pairs: Vec<Pair>,
}

impl EvaluationSet {
    /// Builds a validated set; every error names the offending index.
    pub fn new(models: &[FeedbackModel], predictions: &[f64]) -> Result<Self> {
        if models.is_empty() && predictions.is_empty() {
            return Err(Error::Empty("evaluation set needs at least one pair"));
        }
        if models.len() != predictions.len() {
            return Err(Error::LengthMismatch {
                left_name: "models",
                left: models.len(),
                right_name: "predictions",
                right: predictions.len(),
            });
        }
        let mut pairs = Vec::with_capacity(models.len());
        for (index, (m, &p)) in models.iter().zip(predictions).enumerate() {
            if !m.mu.is_finite() {
                return Err(Error::NonFinite { what: "mu", index });
            }
            if !m.sigma.is_finite() || m.sigma < 0.0 {
                return Err(Error::NonFinite { what: "sigma", index });
            }
            if !p.is_finite() {
                return Err(Error::NonFinite { what: "prediction", index });
            }
            pairs.push(Pair { feedback: *m, prediction: p });
        }
        Ok(Self { pairs })
    }

    /// Builds a set directly from `(delta, sigma^2)` pairs, with prediction 0.
    pub fn from_deviations(deltas: &[f64], sigma_sq: &[f64]) -> Result<Self> {
        if deltas.len() != sigma_sq.len() {
            return Err(Error::LengthMismatch {
                left_name: "deltas",
                left: deltas.len(),
                right_name: "sigma_sq",
                right: sigma_sq.len(),
            });
        }
        let mut models = Vec::with_capacity(deltas.len());
        for (index, (&d, &s2)) in deltas.iter().zip(sigma_sq).enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFinite { what: "delta", index });
            }
            if !s2.is_finite() || s2 < 0.0 {
                return Err(Error::NonFinite { what: "sigma_sq", index });
            }
            models.push(FeedbackModel { mu: d, sigma: s2.sqrt() });
        }
        Self::new(&models, &vec![0.0; deltas.len()])
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(Pair::delta)
    }

    /// The set with every pair repeated `times` times in block order.
    pub fn repeated(&self, times: usize) -> Self {
        let mut pairs = Vec::with_capacity(self.pairs.len() * times);
        for _ in 0..times {
            pairs.extend_from_slice(&self.pairs);
        }
        Self { pairs }
    }
}

/// Gaussian summary of a metric's outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDistribution {
    pub mean: f64,
    pub variance: f64,
}

impl MetricDistribution {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() {
            return Err(invalid("metric distribution parameters must be finite"));
        }
        if variance < 0.0 {
            return Err(invalid(format!("variance must be >= 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Monte-Carlo sample of metric outcomes together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    seed: u64,
    tau: usize,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>, seed: u64) -> Result<Self> {
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { what: "sample", index });
        }
        let tau = samples.len();
        Ok(Self { samples, seed, tau })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Convenience constructor mirroring the free-function style used elsewhere.
pub fn make_evaluation_set(models: &[FeedbackModel], predictions: &[f64]) -> Result<EvaluationSet> {
    EvaluationSet::new(models, predictions)
}
