//! Gaussian error propagation.
//!
//! A metric `g(X)` of an uncertain argument `X` is summarised by the Taylor
//! expansion of `g` around `E[X]`: the expectation picks up `g^(k)(mu)/k! * m_k`
//! for each central moment `m_k`, the variance picks up
//! `(g^(k)(mu)/k!)^2 * (m_2k - m_k^2)` term by term (cross terms between powers
//! are dropped). The MSE/RMSE closed forms below are this machinery applied to
//! the condensed variable `Z = (1/N) * sum (X_v - pi_v)^2`.

use serde::{Deserialize, Serialize};

use crate::domain::{EvaluationSet, MetricDistribution};
use crate::error::{invalid, Error, Result};

/// Expectation and central moments `m_1..m_K` of the argument of `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    mu: f64,
    central: Vec<f64>,
}

impl MomentVector {
    /// `central[k-1]` holds `m_k`; `m_1` must be zero.
    pub fn new(mu: f64, central: Vec<f64>) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite { what: "mu", index: 0 });
        }
        if let Some(index) = central.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite { what: "central moment", index: index + 1 });
        }
        if let Some(&m1) = central.first() {
            if m1 != 0.0 {
                return Err(invalid(format!("first central moment must be 0, got {m1}")));
            }
        }
        for (i, &m) in central.iter().enumerate() {
            let k = i + 1;
            if k % 2 == 0 && m < 0.0 {
                return Err(invalid(format!("even central moment m_{k} is negative ({m})")));
            }
        }
        Ok(Self { mu, central })
    }

    /// Central moments of `N(mu, variance)` up to order `max_order`.
    pub fn gaussian(mu: f64, variance: f64, max_order: usize) -> Result<Self> {
        if variance < 0.0 {
            return Err(invalid("variance must be >= 0"));
        }
        let central = (1..=max_order)
            .map(|k| {
                if k % 2 == 1 {
                    0.0
                } else {
                    // sigma^k (k-1)!!
                    let dfact: f64 = (1..k).step_by(2).map(|j| j as f64).product();
                    variance.powi(k as i32 / 2) * dfact
                }
            })
            .collect();
        Self::new(mu, central)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Highest available order K.
    pub fn max_order(&self) -> usize {
        self.central.len()
    }

    /// `m_k` with `m_0 = 1`.
    pub fn moment(&self, k: usize) -> Option<f64> {
        match k {
            0 => Some(1.0),
            _ => self.central.get(k - 1).copied(),
        }
    }
}

/// `g(mu), g'(mu), ..., g^(K)(mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEvaluations {
    values: Vec<f64>,
}

impl DerivativeEvaluations {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("derivative evaluations"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "derivative", index });
        }
        Ok(Self { values })
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Truncated Taylor expectation `sum_{k=0..K} g^(k)(mu)/k! * m_k`.
pub fn taylor_expectation(d: &DerivativeEvaluations, m: &MomentVector, order: usize) -> Result<f64> {
    if order > d.max_order() {
        return Err(Error::Insufficient(format!(
            "order {order} needs {} derivatives, got {}",
            order + 1,
            d.max_order() + 1
        )));
    }
    if order > m.max_order() {
        return Err(Error::Insufficient(format!(
            "order {order} needs central moments up to m_{order}, got m_{}",
            m.max_order()
        )));
    }
    let mut sum = 0.0;
    for k in 0..=order {
        // m_1 vanishes identically
        let mk = if k == 1 { 0.0 } else { m.moment(k).unwrap_or(0.0) };
        sum += d.get(k).unwrap_or(0.0) / factorial(k) * mk;
    }
    Ok(sum)
}

/// Term-wise Taylor variance `sum_{k=1..K} (g^(k)(mu)/k!)^2 (m_2k - m_k^2)`.
pub fn taylor_variance(d: &DerivativeEvaluations, m: &MomentVector, order: usize) -> Result<f64> {
    if order > d.max_order() {
        return Err(Error::Insufficient(format!(
            "order {order} needs {} derivatives, got {}",
            order + 1,
            d.max_order() + 1
        )));
    }
    if 2 * order > m.max_order() {
        return Err(Error::Insufficient(format!(
            "order {order} needs central moments up to m_{}, got m_{}",
            2 * order,
            m.max_order()
        )));
    }
    let mut sum = 0.0;
    for k in 1..=order {
        let coef = d.get(k).unwrap_or(0.0) / factorial(k);
        let mk = if k == 1 { 0.0 } else { m.moment(k).unwrap_or(0.0) };
        let m2k = m.moment(2 * k).unwrap_or(0.0);
        sum += coef * coef * (m2k - mk * mk);
    }
    Ok(sum)
}

/// Distribution of the MSE `Z = (1/N) sum (X_v - pi_v)^2`.
///
/// `E[Z] = (1/N) sum (s^2 + d^2)`, `V[Z] = (2/N^2) sum (s^4 + 2 s^2 d^2)`.
pub fn mse_distribution(set: &EvaluationSet) -> MetricDistribution {
    let n = set.len() as f64;
    let mut first = 0.0;
    let mut second = 0.0;
    for p in set.pairs() {
        let s2 = p.feedback.variance();
        let d2 = p.delta() * p.delta();
        first += s2 + d2;
        second += s2 * s2 + 2.0 * s2 * d2;
    }
    MetricDistribution { mean: first / n, variance: 2.0 * second / (n * n) }
}

/// First-order distribution of the RMSE `sqrt(Z)`.
///
/// Mean `sqrt(E[Z])`, variance `V[Z] / (4 E[Z])`; a set with `E[Z] = 0` is a
/// point mass at zero.
pub fn rmse_distribution(set: &EvaluationSet) -> MetricDistribution {
    let z = mse_distribution(set);
    if z.mean == 0.0 {
        return MetricDistribution { mean: 0.0, variance: 0.0 };
    }
    MetricDistribution { mean: z.mean.sqrt(), variance: z.variance / (4.0 * z.mean) }
}

/// Derivatives of `sqrt` at `z`, up to `order`.
pub fn sqrt_derivatives(z: f64, order: usize) -> Result<DerivativeEvaluations> {
    if z <= 0.0 {
        return Err(invalid("sqrt derivatives need a positive point"));
    }
    // d^k/dz^k z^(1/2) = c_k z^(1/2 - k), c_k = prod_{j<k} (1/2 - j)
    let mut values = Vec::with_capacity(order + 1);
    let mut coef = 1.0;
    for k in 0..=order {
        values.push(coef * z.powf(0.5 - k as f64));
        coef *= 0.5 - k as f64;
    }
    DerivativeEvaluations::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FeedbackModel;
    use approx::assert_relative_eq;

    fn set(pairs: &[(f64, f64)]) -> EvaluationSet {
        // (delta, sigma^2)
        let d: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        EvaluationSet::from_deviations(&d, &s).unwrap()
    }

    fn std_normal_moments(k: usize) -> MomentVector {
        MomentVector::gaussian(0.0, 1.0, k).unwrap()
    }

    #[test]
    fn identity_expectation_is_mu() {
        let d = DerivativeEvaluations::new(vec![2.5, 1.0, 0.0]).unwrap();
        let m = MomentVector::new(2.5, vec![0.0, 0.7]).unwrap();
        assert_eq!(taylor_expectation(&d, &m, 2).unwrap(), 2.5);
    }

    #[test]
    fn square_expectation_at_zero() {
        let d = DerivativeEvaluations::new(vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(taylor_expectation(&d, &std_normal_moments(2), 2).unwrap(), 1.0);
    }

    #[test]
    fn exp_expectation_truncation_gap() {
        let d = DerivativeEvaluations::new(vec![1.0; 5]).unwrap();
        let approx4 = taylor_expectation(&d, &std_normal_moments(4), 4).unwrap();
        assert!((approx4 - 1.625).abs() < 1e-15);

        // composite Simpson on [-40, 40] for E[exp(X)], X ~ N(0, 1)
        let (a, b, n) = (-40.0_f64, 40.0_f64, 200_000usize);
        let h = (b - a) / n as f64;
        let f = |x: f64| x.exp() * crate::normal::pdf(x);
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let exact = s * h / 3.0;
        assert!((exact - 0.5_f64.exp()).abs() < 1e-10);
        // order 4 leaves a gap of about 0.0237
        assert!((exact - approx4 - 0.023_721_270_700_128).abs() < 1e-9);
    }

    #[test]
    fn variance_examples() {
        let m = MomentVector::new(0.0, vec![0.0, 0.3]).unwrap();
        let identity = DerivativeEvaluations::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(taylor_variance(&identity, &m, 1).unwrap(), 0.3);

        let square = DerivativeEvaluations::new(vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(taylor_variance(&square, &std_normal_moments(4), 2).unwrap(), 2.0);

        let constant = DerivativeEvaluations::new(vec![4.0, 0.0, 0.0]).unwrap();
        assert_eq!(taylor_variance(&constant, &std_normal_moments(4), 2).unwrap(), 0.0);
    }

    #[test]
    fn insufficient_order_is_an_error() {
        let d = DerivativeEvaluations::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            taylor_expectation(&d, &std_normal_moments(4), 3),
            Err(Error::Insufficient(_))
        ));
        let d = DerivativeEvaluations::new(vec![1.0; 4]).unwrap();
        assert!(matches!(taylor_variance(&d, &std_normal_moments(4), 3), Err(Error::Insufficient(_))));
        assert!(MomentVector::new(0.0, vec![0.1, 1.0]).is_err());
        assert!(MomentVector::new(0.0, vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn mse_examples() {
        let z = mse_distribution(&set(&[(1.0, 0.0)]));
        assert_eq!((z.mean, z.variance), (1.0, 0.0));

        let z = mse_distribution(&set(&[(1.0, 1.0), (0.0, 0.25)]));
        assert_relative_eq!(z.mean, 1.125, max_relative = 1e-15);
        assert_relative_eq!(z.variance, 1.531_25, max_relative = 1e-15);
    }

    #[test]
    fn duplication_halves_variance() {
        let s = set(&[(1.0, 1.0), (0.0, 0.25), (2.5, 3.0)]);
        let z1 = mse_distribution(&s);
        let z2 = mse_distribution(&s.repeated(2));
        assert_relative_eq!(z2.mean, z1.mean, max_relative = 1e-12);
        assert_relative_eq!(z2.variance, z1.variance / 2.0, max_relative = 1e-12);
        let r1 = rmse_distribution(&s);
        let r2 = rmse_distribution(&s.repeated(2));
        assert_relative_eq!(r2.mean, r1.mean, max_relative = 1e-12);
        assert_relative_eq!(r2.variance, r1.variance / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rmse_examples() {
        let s = set(&[(1.0, 0.0), (-2.0, 0.0), (0.5, 0.0)]);
        let r = rmse_distribution(&s);
        let classic = ((1.0 + 4.0 + 0.25) / 3.0_f64).sqrt();
        assert_eq!(r.mean, classic);
        assert_eq!(r.variance, 0.0);

        let r = rmse_distribution(&set(&[(1.0, 1.0), (0.0, 0.25)]));
        assert_relative_eq!(r.mean, 1.125_f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(r.variance, 1.531_25 / 4.5, max_relative = 1e-15);
        assert!((r.mean - 1.060_66).abs() < 1e-5);
        assert!((r.variance - 0.340_28).abs() < 1e-5);

        let r = rmse_distribution(&set(&[(0.0, 0.8); 5]));
        assert_relative_eq!(r.mean, 0.8_f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn degenerate_perfect_predictor() {
        let models = [FeedbackModel::point_mass(3.0).unwrap(); 4];
        let s = EvaluationSet::new(&models, &[3.0; 4]).unwrap();
        assert_eq!(rmse_distribution(&s), MetricDistribution { mean: 0.0, variance: 0.0 });
    }

    #[test]
    fn closed_form_matches_generic_taylor_route() {
        let s = set(&[(1.0, 1.0), (0.0, 0.25), (3.1, 2.2), (0.4, 0.16)]);
        let z = mse_distribution(&s);
        let d = sqrt_derivatives(z.mean, 1).unwrap();
        let m = MomentVector::gaussian(z.mean, z.variance, 2).unwrap();
        let r = rmse_distribution(&s);
        assert_relative_eq!(taylor_expectation(&d, &m, 1).unwrap(), r.mean, max_relative = 1e-14);
        assert_relative_eq!(taylor_variance(&d, &m, 1).unwrap(), r.variance, max_relative = 1e-14);
    }

    #[test]
    fn sqrt_derivatives_values() {
        let d = sqrt_derivatives(4.0, 3).unwrap();
        assert_eq!(d.get(0), Some(2.0));
        assert_eq!(d.get(1), Some(0.25));
        assert_relative_eq!(d.get(2).unwrap(), -0.25 * 4.0_f64.powf(-1.5), max_relative = 1e-15);
        assert_relative_eq!(d.get(3).unwrap(), 0.375 * 4.0_f64.powf(-2.5), max_relative = 1e-15);
    }
}
