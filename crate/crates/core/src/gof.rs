//! Goodness-of-fit checks for the Gaussian approximation: divergences between
//! discretised distributions and least-squares parameter matching.

use serde::{Deserialize, Serialize};

use crate::domain::{EmpiricalDistribution, MetricDistribution};
use crate::error::{invalid, Error, Result};
use crate::mc::{equal_width_edges, histogram_on_edges, Histogram};
use crate::normal;

/// Bins in the standard comparison grid.
pub const DEFAULT_BINS: usize = 100;
/// Relative margin added on each side of the comparison grid.
pub const GRID_MARGIN: f64 = 0.01;
/// Half-width, in standard deviations, of the support assigned to a Gaussian.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 4.0;
/// Mass substituted for empty `q` bins under positive `p` mass in KL.
pub const KL_SMOOTHING: f64 = 1e-12;

fn check_edges(p: &Histogram, q: &Histogram) -> Result<()> {
    if p.edges() != q.edges() {
        return Err(invalid("histograms must share identical edges"));
    }
    Ok(())
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / if qi > 0.0 { qi } else { KL_SMOOTHING }).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Kullback-Leibler divergence `sum p_i ln(p_i / q_i)` in nats.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    check_edges(p, q)?;
    Ok(kl_raw(p.mass(), q.mass()))
}

/// Jensen-Shannon divergence divided by `2 ln 2`, so it lies in `[0, 0.5]`.
pub fn njsd(p: &Histogram, q: &Histogram) -> Result<f64> {
    check_edges(p, q)?;
    let m: Vec<f64> = p.mass().iter().zip(q.mass()).map(|(a, b)| 0.5 * (a + b)).collect();
    let jsd = 0.5 * kl_raw(p.mass(), &m) + 0.5 * kl_raw(q.mass(), &m);
    Ok(jsd / (2.0 * std::f64::consts::LN_2))
}

/// Ordinary least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `y = slope * x + intercept`; `r_squared` is the squared sample
/// correlation, defined as 0 when `y` is constant.
pub fn linear_regression(points: &[(f64, f64)]) -> Result<RegressionResult> {
    if points.len() < 2 {
        return Err(Error::Insufficient("regression needs at least 2 points".into()));
    }
    if let Some(index) = points.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite { what: "point", index });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(invalid("regression needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 0.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RegressionResult { slope, intercept, r_squared })
}

/// Gaussian mass per bin of `edges`, renormalised over the covered range.
pub fn discretize_gaussian(dist: &MetricDistribution, edges: &[f64]) -> Result<Histogram> {
    if !(dist.variance > 0.0) {
        return Err(invalid("cannot discretise a zero-variance distribution"));
    }
    if edges.len() < 2 {
        return Err(invalid("need at least two edges"));
    }
    let sd = dist.std_dev();
    let weights = edges
        .windows(2)
        .map(|w| normal::interval_mass((w[0] - dist.mean) / sd, (w[1] - dist.mean) / sd))
        .collect();
    Histogram::from_weights(edges.to_vec(), weights)
}

/// Common grid for comparing a sample with a Gaussian: `bins` equal-width bins
/// over the union of the sample range and `mean +/- 4 sd`, widened by 1% of
/// that span on each side.
pub fn comparison_edges(samples: &[f64], dist: &MetricDistribution, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(invalid("bins must be at least 2"));
    }
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let half = GAUSSIAN_SUPPORT_SIGMAS * dist.std_dev();
    let mut lo = dist.mean - half;
    let mut hi = dist.mean + half;
    for &x in samples {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let margin = GRID_MARGIN * (hi - lo);
    Ok(equal_width_edges(lo - margin, hi + margin, bins))
}

/// nJSD between a Monte-Carlo sample and a Gaussian on the common grid.
pub fn sample_vs_gaussian_njsd(samples: &EmpiricalDistribution, dist: &MetricDistribution, bins: usize) -> Result<f64> {
    let edges = comparison_edges(samples.samples(), dist, bins)?;
    let p = histogram_on_edges(samples.samples(), &edges)?;
    let q = discretize_gaussian(dist, &edges)?;
    njsd(&p, &q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(mass: &[f64]) -> Histogram {
        let edges: Vec<f64> = (0..=mass.len()).map(|i| i as f64).collect();
        Histogram::from_weights(edges, mass.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = hist(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let kl = kl_divergence(&hist(&[1.0, 0.0]), &hist(&[0.5, 0.5])).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_smooths_empty_q_bins() {
        let kl = kl_divergence(&hist(&[0.5, 0.5]), &hist(&[1.0, 0.0])).unwrap();
        let expected = 0.5 * (0.5_f64 / 1.0).ln() + 0.5 * (0.5 / KL_SMOOTHING).ln();
        assert!((kl - expected).abs() < 1e-12);
    }

    #[test]
    fn njsd_examples() {
        let p = hist(&[0.1, 0.6, 0.3]);
        assert_eq!(njsd(&p, &p).unwrap(), 0.0);
        let v = njsd(&hist(&[1.0, 0.0]), &hist(&[0.0, 1.0])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let q = hist(&[0.3, 0.3, 0.4]);
        assert_eq!(njsd(&p, &q).unwrap(), njsd(&q, &p).unwrap());
    }

    #[test]
    fn edge_mismatch_is_an_error() {
        let p = hist(&[0.5, 0.5]);
        let q = Histogram::from_weights(vec![0.0, 0.5, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(kl_divergence(&p, &q).is_err());
        assert!(njsd(&p, &q).is_err());
    }

    #[test]
    fn regression_examples() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let r = linear_regression(&pts).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12 && (r.intercept - 1.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);

        let r = linear_regression(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!(r.slope.abs() < 1e-15);
        assert!((r.intercept - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.r_squared.abs() < 1e-15);

        let r = linear_regression(&[(0.0, 4.0), (1.0, 4.0), (3.0, 4.0)]).unwrap();
        assert_eq!((r.slope, r.r_squared), (0.0, 0.0));
    }

    #[test]
    fn regression_rejects_degenerate_x() {
        assert!(linear_regression(&[(1.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(linear_regression(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn discretize_examples() {
        let d = MetricDistribution::new(0.0, 1.0).unwrap();
        let h = discretize_gaussian(&d, &[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((h.mass()[0] - h.mass()[3]).abs() < 1e-15);
        assert!((h.mass()[1] - h.mass()[2]).abs() < 1e-15);

        let h = discretize_gaussian(&d, &[-10.0, 10.0]).unwrap();
        assert_eq!(h.mass(), &[1.0]);

        let h = discretize_gaussian(&d, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((h.mass()[0] - 0.5).abs() < 1e-15 && (h.mass()[1] - 0.5).abs() < 1e-15);

        let z = MetricDistribution::new(0.0, 0.0).unwrap();
        assert!(discretize_gaussian(&z, &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn gaussian_against_own_discretisation() {
        let d = MetricDistribution::new(1.3, 0.04).unwrap();
        let edges = equal_width_edges(0.5, 2.1, DEFAULT_BINS);
        let p = discretize_gaussian(&d, &edges).unwrap();
        let q = discretize_gaussian(&d, &edges).unwrap();
        assert!(njsd(&p, &q).unwrap() < 1e-9);
    }
}
