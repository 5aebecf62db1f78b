use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use unceval::experiments::{
    error_probability_sweep, linear_grid, matching_study, sensitivity_sweep, srmse_error_comparison, ErrorLevels,
    ErrorSweepConfig, FixedParams, MatchingConfig, SrmseComparisonConfig, SweepSpec, Varied,
};
use unceval::ingest::{
    baseline_predictor, evaluation_set, fit_feedback_models_with_floor, parse_models_csv, per_trial_scores,
    read_predictions_file, read_ratings_file, write_models_csv, Predictor, Predictions,
};
use unceval::mc::{fit_gaussian, simulate_metric, Metric};
use unceval::propagate::{mse_distribution, rmse_distribution};
use unceval::ranking::{rank_systems, ranking_frequencies};
use unceval::srmse::{srmse_simulate_with, SrmseConfig};
use unceval::{EvaluationSet, MetricDistribution};

use crate::args::{
    AnalyzeArgs, Format, GofArgs, GofDriver, LevelsArg, PropagateArgs, RankArgs, SimulateArgs, SrmseArgs,
    SrmseDriver, SweepArgs, SweepDriver, VaryArg,
};
use crate::config::{
    resolve, AnalyzeConfig, GofConfig, InputConfig, PropagateConfig, RankConfig, SimulateConfig, SrmseCmdConfig,
    SweepConfig,
};
use crate::output::{format_or, write_csv, write_json, Meta};
use crate::CliError;

fn load_set(input: &InputConfig) -> Result<EvaluationSet, CliError> {
    let models = match (&input.models, &input.ratings) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --models or --ratings, not both".into())),
        (None, None) => return Err(CliError::Usage("one of --models or --ratings is required".into())),
        (Some(path), None) => {
            if input.sigma_floor.is_some() {
                return Err(CliError::Usage("--sigma-floor applies to models fitted from --ratings".into()));
            }
            let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            (parse_models_csv(file)?, None)
        }
        (None, Some(path)) => {
            let data = read_ratings_file(path)?;
            (fit_feedback_models_with_floor(&data, input.sigma_floor)?, Some(data))
        }
    };
    let predictions: Predictions = match (&input.predictions, &input.predictor) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --predictions or --predictor, not both".into())),
        (Some(path), None) => read_predictions_file(path)?,
        (None, Some(kind)) => {
            let kind: Predictor = kind.parse().map_err(|e: unceval::Error| CliError::Usage(e.to_string()))?;
            let data = models
                .1
                .as_ref()
                .ok_or_else(|| CliError::Usage("--predictor needs --ratings".into()))?;
            baseline_predictor(data, kind)
        }
        (None, None) => return Err(CliError::Usage("one of --predictions or --predictor is required".into())),
    };
    Ok(evaluation_set(&models.0, &predictions)?)
}

#[derive(Serialize)]
struct DistributionRow {
    metric: Metric,
    n: usize,
    mean: f64,
    variance: f64,
    std_dev: f64,
}

pub fn propagate(args: PropagateArgs) -> Result<(), CliError> {
    let config: PropagateConfig = resolve(args.common.config.as_deref(), &args)?;
    let set = load_set(&config.input)?;
    let d = match config.metric {
        Metric::Mse => mse_distribution(&set),
        Metric::Rmse => rmse_distribution(&set),
        Metric::Mae => return Err(CliError::Usage("analytic propagation supports mse and rmse".into())),
    };
    let row = DistributionRow { metric: config.metric, n: set.len(), mean: d.mean, variance: d.variance, std_dev: d.std_dev() };
    let meta = Meta::new("propagate", &config);
    match format_or(args.common.format, Format::Json) {
        Format::Json => write_json(args.common.out.as_deref(), &meta, &row),
        Format::Csv => write_csv(args.common.out.as_deref(), &meta, &[], &[row]),
    }
}

#[derive(Serialize)]
struct SampleRow {
    trial: usize,
    value: f64,
}

fn write_samples(
    command: &str,
    config: &impl Serialize,
    common: &crate::args::Common,
    samples: &[f64],
    fit: &MetricDistribution,
) -> Result<(), CliError> {
    let meta = Meta::new(command, config);
    match format_or(common.format, Format::Csv) {
        Format::Json => write_json(
            common.out.as_deref(),
            &meta,
            &json!({ "fit": fit, "tau": samples.len(), "samples": samples }),
        ),
        Format::Csv => {
            let rows: Vec<SampleRow> = samples.iter().enumerate().map(|(trial, &value)| SampleRow { trial, value }).collect();
            let note = format!("fit: mean={} variance={}", fit.mean, fit.variance);
            write_csv(common.out.as_deref(), &meta, &[note], &rows)
        }
    }
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config: SimulateConfig = resolve(args.common.config.as_deref(), &args)?;
    let set = load_set(&config.input)?;
    let e = simulate_metric(&set, config.metric, config.tau, config.seed)?;
    let fit = fit_gaussian(&e)?;
    write_samples("simulate", &config, &args.common, e.samples(), &fit)
}

#[derive(Debug, Deserialize)]
struct SystemRow {
    system: String,
    mean: f64,
    variance: f64,
}

fn read_systems(path: &Path) -> Result<Vec<(String, MetricDistribution)>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let rows: Vec<SystemRow> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_reader(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
    } else {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
        rdr.deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
    };
    rows.into_iter()
        .map(|r| Ok((r.system, MetricDistribution::new(r.mean, r.variance)?)))
        .collect()
}

#[derive(Serialize)]
struct PairRow {
    better: String,
    worse: String,
    error: f64,
    distinguishable: bool,
}

pub fn rank(args: RankArgs) -> Result<(), CliError> {
    let config: RankConfig = resolve(args.common.config.as_deref(), &args)?;
    let path = config.systems.as_ref().ok_or_else(|| CliError::Usage("--systems is required".into()))?;
    let report = rank_systems(&read_systems(path)?, config.p_max)?;
    let meta = Meta::new("rank", &config);
    match format_or(args.common.format, Format::Json) {
        Format::Json => write_json(args.common.out.as_deref(), &meta, &report),
        Format::Csv => {
            let rows: Vec<PairRow> = report
                .pairs()
                .into_iter()
                .map(|(better, worse, error, distinguishable)| PairRow { better, worse, error, distinguishable })
                .collect();
            let note = format!("order: {}", report.order.join(" "));
            write_csv(args.common.out.as_deref(), &meta, &[note], &rows)
        }
    }
}

pub fn gof(args: GofArgs) -> Result<(), CliError> {
    let config: GofConfig = resolve(args.common.config.as_deref(), &args)?;
    let study = matching_study(&MatchingConfig {
        n_grid: config.n_grid.clone(),
        reps: config.reps,
        tau: config.tau,
        bins: config.bins,
        bounds: config.bounds,
        seed: config.seed,
    })?;
    let meta = Meta::new("gof", &config);
    let out = args.common.out.as_deref();
    let format = format_or(args.common.format, Format::Csv);
    match config.driver {
        GofDriver::Matching => match format {
            Format::Json => write_json(out, &meta, &study),
            Format::Csv => {
                let notes = [
                    format!(
                        "mean fit: slope={} intercept={} r_squared={}",
                        study.mean_fit.slope, study.mean_fit.intercept, study.mean_fit.r_squared
                    ),
                    format!(
                        "variance fit: slope={} intercept={} r_squared={}",
                        study.variance_fit.slope, study.variance_fit.intercept, study.variance_fit.r_squared
                    ),
                ];
                write_csv(out, &meta, &notes, &study.points)
            }
        },
        GofDriver::Similarity => {
            #[derive(Serialize)]
            struct Row {
                n: usize,
                rep: usize,
                njsd: Option<f64>,
            }
            let rows: Vec<Row> = study.points.iter().map(|p| Row { n: p.n, rep: p.rep, njsd: p.njsd }).collect();
            match format {
                Format::Json => write_json(out, &meta, &json!({ "summary": study.njsd_summary, "values": rows })),
                Format::Csv => {
                    let notes: Vec<String> = study
                        .njsd_summary
                        .iter()
                        .map(|q| format!("njsd: min={} q1={} median={} q3={} max={}", q.min, q.q1, q.median, q.q3, q.max))
                        .collect();
                    write_csv(out, &meta, &notes, &rows)
                }
            }
        }
    }
}

fn default_sensitivity_grid(vary: VaryArg) -> Vec<f64> {
    match vary {
        VaryArg::N => vec![10.0, 50.0, 100.0, 250.0, 500.0, 1000.0, 2500.0],
        VaryArg::Delta => linear_grid(0.0, 4.0, 0.25),
        VaryArg::SigmaSq => linear_grid(0.16, 3.86, 0.37),
    }
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let config: SweepConfig = resolve(args.common.config.as_deref(), &args)?;
    let meta = Meta::new("sweep", &config);
    let out = args.common.out.as_deref();
    let format = format_or(args.common.format, Format::Csv);
    match config.driver {
        SweepDriver::Sensitivity => {
            let spec = SweepSpec {
                varied: match config.vary {
                    VaryArg::N => Varied::N,
                    VaryArg::Delta => Varied::Delta,
                    VaryArg::SigmaSq => Varied::SigmaSq,
                },
                grid: config.grid.clone().unwrap_or_else(|| default_sensitivity_grid(config.vary)),
                fixed: FixedParams { n: config.fixed_n, delta: config.fixed_delta, sigma_sq: config.fixed_sigma_sq },
                replications: config.replications,
                bounds: config.bounds,
                seed: config.seed,
            };
            let rows = sensitivity_sweep(&spec)?;
            match format {
                Format::Json => write_json(out, &meta, &json!({ "rows": rows })),
                Format::Csv => write_csv(out, &meta, &[], &rows),
            }
        }
        SweepDriver::Error => {
            let levels = match config.levels {
                LevelsArg::N => ErrorLevels::SampleSize(config.n_levels.clone()),
                LevelsArg::Sigma => ErrorLevels::SigmaSq { n: config.n, levels: config.sigma_levels.clone() },
            };
            let rows = error_probability_sweep(&ErrorSweepConfig {
                delta_grid: config.delta_grid.clone(),
                levels,
                bounds: config.bounds,
                replications: config.replications,
                ratio: config.ratio,
                seed: config.seed,
            })?;
            match format {
                Format::Json => write_json(out, &meta, &json!({ "rows": rows })),
                Format::Csv => write_csv(out, &meta, &[], &rows),
            }
        }
    }
}

pub fn srmse(args: SrmseArgs) -> Result<(), CliError> {
    let config: SrmseCmdConfig = resolve(args.common.config.as_deref(), &args)?;
    match config.driver {
        SrmseDriver::Simulate => {
            let set = load_set(&config.input)?;
            let cfg = SrmseConfig {
                alpha: config.alpha,
                normalization: config.normalization,
                exclude_empty: config.exclude_empty,
            };
            let e = srmse_simulate_with(&set, &cfg, config.tau, config.seed)?;
            let fit = fit_gaussian(&e)?;
            write_samples("srmse", &config, &args.common, e.samples(), &fit)
        }
        SrmseDriver::Compare => {
            let rows = srmse_error_comparison(&SrmseComparisonConfig {
                n: config.n,
                alpha: config.alpha,
                tau: config.tau,
                delta_grid: config.delta_grid.clone(),
                normalization: config.normalization,
                bounds: config.bounds,
                ratio: config.ratio,
                seed: config.seed,
            })?;
            let meta = Meta::new("srmse", &config);
            match format_or(args.common.format, Format::Csv) {
                Format::Json => write_json(args.common.out.as_deref(), &meta, &json!({ "rows": rows })),
                Format::Csv => write_csv(args.common.out.as_deref(), &meta, &[], &rows),
            }
        }
    }
}

#[derive(Serialize)]
struct ScoreRow {
    system: String,
    trial: u32,
    score: f64,
}

#[derive(Serialize)]
struct FrequencyRow {
    ranking: String,
    count: usize,
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let config: AnalyzeConfig = resolve(args.common.config.as_deref(), &args)?;
    let path = config.ratings.as_ref().ok_or_else(|| CliError::Usage("--ratings is required".into()))?;
    let data = read_ratings_file(path)?;
    let models = fit_feedback_models_with_floor(&data, config.sigma_floor)?;

    let mut systems: Vec<(String, Predictions)> =
        Predictor::ALL.iter().map(|&p| (p.to_string(), baseline_predictor(&data, p))).collect();
    for spec in &config.systems {
        let (name, file) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--system expects NAME=PATH, got '{spec}'")))?;
        systems.push((name.to_string(), read_predictions_file(Path::new(file))?));
    }

    let mut scores = Vec::new();
    let mut per_system = Vec::with_capacity(systems.len());
    for (name, preds) in &systems {
        let s = per_trial_scores(&data, preds, config.metric, config.common_trials)?;
        scores.extend(s.iter().map(|&(trial, score)| ScoreRow { system: name.clone(), trial, score }));
        per_system.push(s);
    }
    let ids: Vec<String> = systems.iter().map(|s| s.0.clone()).collect();
    let table: Vec<Vec<f64>> = (0..per_system[0].len()).map(|t| per_system.iter().map(|s| s[t].1).collect()).collect();
    let freq = ranking_frequencies(&ids, &table)?;

    if let Some(p) = &config.models_out {
        let f = File::create(p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?;
        write_models_csv(&models, f)?;
    }
    let meta = Meta::new("analyze", &config);
    if let Some(p) = &config.scores_out {
        write_csv(Some(p), &meta, &[], &scores)?;
    }
    match format_or(args.common.format, Format::Json) {
        Format::Json => {
            let models_json: Vec<_> = models
                .iter()
                .map(|m| json!({ "user_id": m.user_id, "item_id": m.item_id, "mu": m.model.mu(), "sigma": m.model.sigma() }))
                .collect();
            write_json(
                args.common.out.as_deref(),
                &meta,
                &json!({ "models": models_json, "scores": scores, "ranking_frequencies": freq }),
            )
        }
        Format::Csv => {
            let rows: Vec<FrequencyRow> = freq
                .sorted()
                .into_iter()
                .map(|(r, count)| FrequencyRow { ranking: r.join(">"), count })
                .collect();
            write_csv(args.common.out.as_deref(), &meta, &[], &rows)
        }
    }
}
