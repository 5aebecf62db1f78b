//! Ranking systems by the expectation of their metric distributions, with the
//! probability that a repeated evaluation inverts each pairwise decision.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::MetricDistribution;
use crate::error::{invalid, Error, Result};
use crate::normal;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    normal::cdf(x)
}

/// `P(Z_a >= Z_b)` for independent Gaussian metric outcomes.
///
/// With zero total variance the comparison is deterministic: 0 if `a` is
/// strictly lower, 1 if strictly higher, 0.5 on a tie.
pub fn error_probability(a: &MetricDistribution, b: &MetricDistribution) -> f64 {
    let total = a.variance + b.variance;
    if total == 0.0 {
        return if a.mean < b.mean {
            0.0
        } else if a.mean > b.mean {
            1.0
        } else {
            0.5
        };
    }
    std_normal_cdf((a.mean - b.mean) / total.sqrt())
}

/// Systems in ascending order of mean with all pairwise error probabilities.
///
/// Matrices are indexed by position in `order`; entry `(i, j)` is
/// `P(Z_i >= Z_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub order: Vec<String>,
    pub distributions: Vec<MetricDistribution>,
    pub p_max: f64,
    pub error_matrix: Vec<Vec<f64>>,
    pub distinguishable: Vec<Vec<bool>>,
}

impl RankingReport {
    /// Long-format rows `(better, worse, error, distinguishable)` for every
    /// ordered pair with `better` ahead of `worse`.
    pub fn pairs(&self) -> Vec<(String, String, f64, bool)> {
        let k = self.order.len();
        let mut rows = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                rows.push((
                    self.order[i].clone(),
                    self.order[j].clone(),
                    self.error_matrix[i][j],
                    self.distinguishable[i][j],
                ));
            }
        }
        rows
    }
}

/// Orders systems by mean (ties by identifier) and fills the error matrix.
pub fn rank_systems(systems: &[(String, MetricDistribution)], p_max: f64) -> Result<RankingReport> {
    if systems.len() < 2 {
        return Err(Error::Insufficient("ranking needs at least 2 systems".into()));
    }
    if !(p_max > 0.0 && p_max < 1.0) {
        return Err(invalid(format!("p_max must lie in (0, 1), got {p_max}")));
    }
    let mut seen = HashSet::new();
    for (id, d) in systems {
        if !seen.insert(id.as_str()) {
            return Err(Error::Duplicate(id.clone()));
        }
        if !d.mean.is_finite() || !d.variance.is_finite() || d.variance < 0.0 {
            return Err(invalid(format!("system '{id}' has an invalid distribution")));
        }
    }
    let mut sorted: Vec<&(String, MetricDistribution)> = systems.iter().collect();
    sorted.sort_by(|x, y| x.1.mean.total_cmp(&y.1.mean).then_with(|| x.0.cmp(&y.0)));

    let k = sorted.len();
    let mut error_matrix = vec![vec![0.0; k]; k];
    let mut distinguishable = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            error_matrix[i][j] = error_probability(&sorted[i].1, &sorted[j].1);
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let flag = error_matrix[i][j] < p_max;
            distinguishable[i][j] = flag;
            distinguishable[j][i] = flag;
        }
    }
    Ok(RankingReport {
        order: sorted.iter().map(|s| s.0.clone()).collect(),
        distributions: sorted.iter().map(|s| s.1).collect(),
        p_max,
        error_matrix,
        distinguishable,
    })
}

/// How often each ordering of the systems occurred over repeated trials.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingFrequency {
    #[serde(with = "counts_as_list")]
    pub counts: BTreeMap<Vec<String>, usize>,
}

/// JSON object keys must be strings, so counts travel as a list of entries.
mod counts_as_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        ranking: Vec<String>,
        count: usize,
    }

    pub fn serialize<S: Serializer>(counts: &BTreeMap<Vec<String>, usize>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = counts
            .iter()
            .map(|(k, &c)| Entry { ranking: k.clone(), count: c })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Vec<String>, usize>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.ranking, e.count)).collect())
    }
}

impl RankingFrequency {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Entries sorted by descending count, then by ranking.
    pub fn sorted(&self) -> Vec<(&[String], usize)> {
        let mut v: Vec<(&[String], usize)> = self.counts.iter().map(|(k, &c)| (k.as_slice(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Counts the ascending-score permutation of systems in every trial.
///
/// `scores[t][s]` is the score of system `ids[s]` in trial `t`.
pub fn ranking_frequencies(ids: &[String], scores: &[Vec<f64>]) -> Result<RankingFrequency> {
    if ids.len() < 2 {
        return Err(Error::Insufficient("ranking needs at least 2 systems".into()));
    }
    if scores.is_empty() {
        return Err(Error::Empty("ranking frequencies need at least one trial"));
    }
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Duplicate(id.clone()));
        }
    }
    let mut freq = RankingFrequency::default();
    for (t, row) in scores.iter().enumerate() {
        if row.len() != ids.len() {
            return Err(invalid(format!(
                "trial {t} has {} scores for {} systems",
                row.len(),
                ids.len()
            )));
        }
        if let Some(s) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "score", index: t * ids.len() + s });
        }
        let mut idx: Vec<usize> = (0..ids.len()).collect();
        idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then_with(|| ids[a].cmp(&ids[b])));
        let perm = idx.into_iter().map(|i| ids[i].clone()).collect();
        *freq.counts.entry(perm).or_insert(0) += 1;
    }
    Ok(freq)
}
