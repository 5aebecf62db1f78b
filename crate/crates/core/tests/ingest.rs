use std::path::Path;

use unceval::ingest::{evaluation_set, read_ratings_file};
use unceval::{baseline_predictor, fit_feedback_models, mse_distribution, parse_ratings_csv, rmse_distribution, Predictor};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn small_fixture_round_trips() {
    let data = read_ratings_file(&fixture("ratings_2x2x2.csv")).unwrap();
    assert_eq!(data.len(), 4);
    assert_eq!(data.get("u1", "i1").unwrap(), &[(1, 3.0), (2, 4.0)]);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    assert_eq!(parse_ratings_csv(buf.as_slice()).unwrap(), data);
}

#[test]
fn pair_mean_minimises_expected_mse() {
    for name in ["ratings_2x2x2.csv", "ratings_study_synthetic.csv"] {
        let data = read_ratings_file(&fixture(name)).unwrap();
        let models = fit_feedback_models(&data);
        let mean = |p| mse_distribution(&evaluation_set(&models, &baseline_predictor(&data, p)).unwrap()).mean;
        assert!(mean(Predictor::R1) <= mean(Predictor::R2), "{name}");
        assert!(mean(Predictor::R1) <= mean(Predictor::R3), "{name}");
    }
}

#[test]
fn constant_raters_predicted_exactly_score_zero() {
    let data = parse_ratings_csv("user_id,item_id,trial,rating\nu,a,1,4\nu,a,2,4\nu,b,1,2\nu,b,2,2\n".as_bytes()).unwrap();
    let models = fit_feedback_models(&data);
    let d = rmse_distribution(&evaluation_set(&models, &baseline_predictor(&data, Predictor::R1)).unwrap());
    assert_eq!((d.mean, d.variance), (0.0, 0.0));
}

#[test]
fn synthetic_fixture_category_mix() {
    let data = read_ratings_file(&fixture("ratings_study_synthetic.csv")).unwrap();
    assert_eq!(data.len(), 20);
    let mut counts = [0usize; 3];
    for (_, list) in data.pairs() {
        assert_eq!(list.len(), 5);
        let mut v: Vec<i64> = list.iter().map(|e| e.1 as i64).collect();
        v.sort_unstable();
        v.dedup();
        counts[v.len().min(3) - 1] += 1;
    }
    assert_eq!(counts, [7, 10, 3]);
}
