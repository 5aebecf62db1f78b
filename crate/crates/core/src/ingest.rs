//! Repeated-rating data: CSV ingestion, fitted feedback models, the three
//! baseline predictors and per-trial metric scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{EvaluationSet, FeedbackModel};
use crate::error::{invalid, Error, Result};
use crate::mc::{DeviationSums, Metric};

/// `(user_id, item_id)`.
pub type PairKey = (String, String);

/// Predictions keyed by pair.
pub type Predictions = BTreeMap<PairKey, f64>;

pub const RATINGS_HEADER: [&str; 4] = ["user_id", "item_id", "trial", "rating"];
pub const PREDICTIONS_HEADER: [&str; 3] = ["user_id", "item_id", "prediction"];
pub const MODELS_HEADER: [&str; 4] = ["user_id", "item_id", "mu", "sigma"];

/// Ratings per pair, each list sorted by trial index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepeatedRatings {
    entries: BTreeMap<PairKey, Vec<(u32, f64)>>,
}

impl RepeatedRatings {
    /// Adds one rating; trial indices start at 1 and are unique per pair.
    pub fn insert(&mut self, user: &str, item: &str, trial: u32, rating: f64) -> Result<()> {
        if trial == 0 {
            return Err(invalid("trial indices start at 1"));
        }
        if !rating.is_finite() {
            return Err(invalid(format!("rating for ({user}, {item}) is not finite")));
        }
        let list = self.entries.entry((user.to_string(), item.to_string())).or_default();
        match list.binary_search_by_key(&trial, |e| e.0) {
            Ok(_) => Err(Error::Duplicate(format!("({user}, {item}) trial {trial}"))),
            Err(pos) => {
                list.insert(pos, (trial, rating));
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, &[(u32, f64)])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn get(&self, user: &str, item: &str) -> Option<&[(u32, f64)]> {
        self.entries.get(&(user.to_string(), item.to_string())).map(Vec::as_slice)
    }

    /// Trial indices present for every pair.
    pub fn common_trials(&self) -> BTreeSet<u32> {
        let mut it = self.entries.values();
        let Some(first) = it.next() else {
            return BTreeSet::new();
        };
        let mut common: BTreeSet<u32> = first.iter().map(|e| e.0).collect();
        for list in it {
            let own: BTreeSet<u32> = list.iter().map(|e| e.0).collect();
            common.retain(|t| own.contains(t));
        }
        common
    }

    /// Writes the data in `ratings.csv` layout, pairs and trials in order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(RATINGS_HEADER).map_err(csv_err)?;
        for ((user, item), list) in &self.entries {
            for (trial, rating) in list {
                out.write_record([user.as_str(), item.as_str(), &trial.to_string(), &rating.to_string()])
                    .map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err)?;
    let line = header.position().map_or(1, |p| p.line());
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line,
            message: format!("expected header '{}', found '{}'", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

fn parse_field<T: FromStr>(field: &str, name: &str, line: u64) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{name} '{field}' is not a valid number") })
}

/// Parses `user_id,item_id,trial,rating`. Lines starting with `#` are skipped.
pub fn parse_ratings_csv<R: Read>(source: R) -> Result<RepeatedRatings> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &RATINGS_HEADER)?;
    let mut data = RepeatedRatings::default();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(Error::Parse { line, message: format!("expected 4 fields, found {}", rec.len()) });
        }
        let trial: u32 = parse_field(&rec[2], "trial", line)?;
        let rating: f64 = parse_field(&rec[3], "rating", line)?;
        data.insert(&rec[0], &rec[1], trial, rating).map_err(|e| {
            let message = match e {
                Error::Duplicate(what) => format!("duplicate rating for {what}"),
                other => other.to_string(),
            };
            Error::Parse { line, message }
        })?;
    }
    if data.is_empty() {
        return Err(Error::Empty("ratings file has no rows"));
    }
    Ok(data)
}

/// Parses `user_id,item_id,prediction`.
pub fn parse_predictions_csv<R: Read>(source: R) -> Result<Predictions> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &PREDICTIONS_HEADER)?;
    let mut out = Predictions::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", rec.len()) });
        }
        let p: f64 = parse_field(&rec[2], "prediction", line)?;
        if !p.is_finite() {
            return Err(Error::Parse { line, message: "prediction is not finite".into() });
        }
        if out.insert((rec[0].to_string(), rec[1].to_string()), p).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate prediction for ({}, {})", &rec[0], &rec[1]) });
        }
    }
    Ok(out)
}

pub fn write_predictions_csv<W: Write>(predictions: &Predictions, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PREDICTIONS_HEADER).map_err(csv_err)?;
    for ((user, item), p) in predictions {
        out.write_record([user.as_str(), item.as_str(), &p.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ratings_file(path: &Path) -> Result<RepeatedRatings> {
    parse_ratings_csv(File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
}

pub fn read_predictions_file(path: &Path) -> Result<Predictions> {
    parse_predictions_csv(File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
}

/// Fitted feedback model of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub user_id: String,
    pub item_id: String,
    pub model: FeedbackModel,
}

/// Sample mean and ML standard deviation of each pair's ratings.
pub fn fit_feedback_models(data: &RepeatedRatings) -> Vec<FittedModel> {
    fit_feedback_models_with_floor(data, None).expect("fitted parameters are finite")
}

/// As [`fit_feedback_models`], raising every sigma to at least `floor`.
pub fn fit_feedback_models_with_floor(data: &RepeatedRatings, floor: Option<f64>) -> Result<Vec<FittedModel>> {
    if let Some(f) = floor {
        if !(f.is_finite() && f >= 0.0) {
            return Err(invalid(format!("sigma floor must be finite and >= 0, got {f}")));
        }
    }
    data.pairs()
        .map(|((user, item), list)| {
            let n = list.len() as f64;
            let mu = list.iter().map(|e| e.1).sum::<f64>() / n;
            let var = list.iter().map(|e| (e.1 - mu) * (e.1 - mu)).sum::<f64>() / n;
            let sigma = floor.map_or(var.sqrt(), |f| var.sqrt().max(f));
            Ok(FittedModel { user_id: user.clone(), item_id: item.clone(), model: FeedbackModel::new(mu, sigma)? })
        })
        .collect()
}

/// Writes `user_id,item_id,mu,sigma` with 17 significant digits.
pub fn write_models_csv<W: Write>(models: &[FittedModel], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MODELS_HEADER).map_err(csv_err)?;
    for m in models {
        out.write_record([
            m.user_id.as_str(),
            m.item_id.as_str(),
            &format!("{:.16e}", m.model.mu()),
            &format!("{:.16e}", m.model.sigma()),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a `models.csv` export.
pub fn parse_models_csv<R: Read>(source: R) -> Result<Vec<FittedModel>> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &MODELS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(Error::Parse { line, message: format!("expected 4 fields, found {}", rec.len()) });
        }
        let mu: f64 = parse_field(&rec[2], "mu", line)?;
        let sigma: f64 = parse_field(&rec[3], "sigma", line)?;
        let model = FeedbackModel::new(mu, sigma).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        out.push(FittedModel { user_id: rec[0].to_string(), item_id: rec[1].to_string(), model });
    }
    Ok(out)
}

/// Baseline predictors: per-pair mean, first rating, constant 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predictor {
    R1,
    R2,
    R3,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [Predictor::R1, Predictor::R2, Predictor::R3];
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predictor::R1 => "R1",
            Predictor::R2 => "R2",
            Predictor::R3 => "R3",
        })
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(Predictor::R1),
            "R2" => Ok(Predictor::R2),
            "R3" => Ok(Predictor::R3),
            other => Err(invalid(format!("unknown predictor '{other}'"))),
        }
    }
}

pub fn baseline_predictor(data: &RepeatedRatings, kind: Predictor) -> Predictions {
    data.pairs()
        .map(|(key, list)| {
            let p = match kind {
                Predictor::R1 => list.iter().map(|e| e.1).sum::<f64>() / list.len() as f64,
                Predictor::R2 => list[0].1,
                Predictor::R3 => 3.0,
            };
            (key.clone(), p)
        })
        .collect()
}

/// Evaluation set pairing fitted models with predictions, in model order.
pub fn evaluation_set(models: &[FittedModel], predictions: &Predictions) -> Result<EvaluationSet> {
    let mut feedback = Vec::with_capacity(models.len());
    let mut preds = Vec::with_capacity(models.len());
    for m in models {
        let p = predictions
            .get(&(m.user_id.clone(), m.item_id.clone()))
            .ok_or_else(|| Error::MissingPrediction { user: m.user_id.clone(), item: m.item_id.clone() })?;
        feedback.push(m.model);
        preds.push(*p);
    }
    EvaluationSet::new(&feedback, &preds)
}

/// Metric score of each trial, in trial order.
///
/// Every pair must carry every trial index unless `common_subset` is set, in
/// which case only trials shared by all pairs are scored.
pub fn per_trial_scores(
    data: &RepeatedRatings,
    predictions: &Predictions,
    metric: Metric,
    common_subset: bool,
) -> Result<Vec<(u32, f64)>> {
    if data.is_empty() {
        return Err(Error::Empty("no rating pairs"));
    }
    let common = data.common_trials();
    if !common_subset {
        let all: BTreeSet<u32> = data.pairs().flat_map(|(_, l)| l.iter().map(|e| e.0)).collect();
        if let Some(t) = all.difference(&common).next() {
            let (user, item) = data
                .pairs()
                .find(|(_, l)| l.binary_search_by_key(t, |e| e.0).is_err())
                .map(|(k, _)| k.clone())
                .expect("a pair lacks the trial");
            return Err(Error::RaggedTrials(format!("pair ({user}, {item}) has no rating for trial {t}")));
        }
    }
    if common.is_empty() {
        return Err(Error::RaggedTrials("no trial index is shared by all pairs".into()));
    }
    let mut preds = Vec::with_capacity(data.len());
    for ((user, item), _) in data.pairs() {
        let p = predictions
            .get(&(user.clone(), item.clone()))
            .ok_or_else(|| Error::MissingPrediction { user: user.clone(), item: item.clone() })?;
        preds.push(*p);
    }
    Ok(common
        .iter()
        .map(|&t| {
            let mut acc = DeviationSums::default();
            for ((_, list), p) in data.pairs().zip(&preds) {
                let i = list.binary_search_by_key(&t, |e| e.0).expect("trial is common");
                acc.push(list[i].1 - p);
            }
            (t, acc.finish(metric))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratings(rows: &[(&str, &str, u32, f64)]) -> RepeatedRatings {
        let mut d = RepeatedRatings::default();
        for &(u, i, t, r) in rows {
            d.insert(u, i, t, r).unwrap();
        }
        d
    }

    fn one_pair(values: &[f64]) -> RepeatedRatings {
        let rows: Vec<_> = values.iter().enumerate().map(|(t, &r)| ("u", "i", t as u32 + 1, r)).collect();
        ratings(&rows)
    }

    #[test]
    fn parse_single_row() {
        let d = parse_ratings_csv("user_id,item_id,trial,rating\nu1,i1,1,3\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.get("u1", "i1").unwrap(), &[(1, 3.0)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let src = "user_id,item_id,trial,rating\nu1,i1,1,3\nu1,i1,1,4\n";
        let err = parse_ratings_csv(src.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");

        let err = parse_ratings_csv("user_id,item_id,trial,rating\nu1,i1,x,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");

        let err = parse_ratings_csv("user,item,trial,rating\nu1,i1,1,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");

        assert!(parse_ratings_csv("user_id,item_id,trial,rating\nu1,i1,0,3\n".as_bytes()).is_err());
    }

    #[test]
    fn trials_are_sorted_and_comments_skipped() {
        let src = "# note\nuser_id,item_id,trial,rating\nu,i,2,4\nu,i,1,2.5\n";
        let d = parse_ratings_csv(src.as_bytes()).unwrap();
        assert_eq!(d.get("u", "i").unwrap(), &[(1, 2.5), (2, 4.0)]);
    }

    #[test]
    fn ratings_round_trip() {
        let d = ratings(&[("a", "x", 1, 0.1), ("a", "x", 2, 4.75), ("b", "y", 1, 1.0 / 3.0)]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(parse_ratings_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn fit_examples() {
        let m = &fit_feedback_models(&one_pair(&[3.0, 3.0, 3.0]))[0].model;
        assert_eq!((m.mu(), m.sigma()), (3.0, 0.0));
        let m = &fit_feedback_models(&one_pair(&[2.0, 4.0]))[0].model;
        assert_eq!((m.mu(), m.sigma()), (3.0, 1.0));
        let m = &fit_feedback_models(&one_pair(&[1.0, 2.0, 3.0, 4.0, 5.0]))[0].model;
        assert_eq!(m.mu(), 3.0);
        assert!((m.sigma() - 2.0_f64.sqrt()).abs() < 1e-15);
        let m = &fit_feedback_models_with_floor(&one_pair(&[3.0]), Some(0.4)).unwrap()[0].model;
        assert_eq!(m.sigma(), 0.4);
    }

    #[test]
    fn models_round_trip_at_full_precision() {
        let models = fit_feedback_models(&one_pair(&[1.0, 2.0, 2.0]));
        let mut buf = Vec::new();
        write_models_csv(&models, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("user_id,item_id,mu,sigma\n"));
        assert_eq!(parse_models_csv(buf.as_slice()).unwrap(), models);
    }

    #[test]
    fn predictor_examples() {
        let d = one_pair(&[2.0, 3.0, 4.0]);
        let key = ("u".to_string(), "i".to_string());
        assert_eq!(baseline_predictor(&d, Predictor::R1)[&key], 3.0);
        assert_eq!(baseline_predictor(&d, Predictor::R2)[&key], 2.0);
        assert_eq!(baseline_predictor(&d, Predictor::R3)[&key], 3.0);
        let d = one_pair(&[5.0]);
        assert_eq!(baseline_predictor(&d, Predictor::R1)[&key], 5.0);
        assert_eq!(baseline_predictor(&d, Predictor::R2)[&key], 5.0);
    }

    #[test]
    fn per_trial_examples() {
        let d = ratings(&[("u1", "i1", 1, 3.0), ("u2", "i1", 1, 5.0)]);
        let preds = baseline_predictor(&d, Predictor::R3);
        let s = per_trial_scores(&d, &preds, Metric::Rmse, false).unwrap();
        assert_eq!(s, vec![(1, 2.0_f64.sqrt())]);

        let preds = baseline_predictor(&d, Predictor::R2);
        assert_eq!(per_trial_scores(&d, &preds, Metric::Rmse, false).unwrap(), vec![(1, 0.0)]);
    }

    #[test]
    fn ragged_trials() {
        let d = ratings(&[("u1", "i1", 1, 3.0), ("u1", "i1", 2, 4.0), ("u2", "i1", 1, 5.0)]);
        let preds = baseline_predictor(&d, Predictor::R3);
        let err = per_trial_scores(&d, &preds, Metric::Mse, false).unwrap_err();
        assert!(matches!(err, Error::RaggedTrials(_)));
        let s = per_trial_scores(&d, &preds, Metric::Mse, true).unwrap();
        assert_eq!(s, vec![(1, 2.0)]);
    }

    #[test]
    fn missing_prediction() {
        let d = ratings(&[("u1", "i1", 1, 3.0)]);
        let err = per_trial_scores(&d, &Predictions::new(), Metric::Rmse, false).unwrap_err();
        assert!(matches!(err, Error::MissingPrediction { .. }));
    }

    #[test]
    fn predictions_round_trip() {
        let d = ratings(&[("u1", "i1", 1, 3.0), ("u2", "i9", 1, 4.5)]);
        let p = baseline_predictor(&d, Predictor::R1);
        let mut buf = Vec::new();
        write_predictions_csv(&p, &mut buf).unwrap();
        assert_eq!(parse_predictions_csv(buf.as_slice()).unwrap(), p);
    }
}
