//! End-to-end pipelines: filter-then-forecast with the time-lag model, and
//! train-then-predict with the recurrent network, scored on the same split.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assimilation::{self, Covariance2, FilterConfig, FilterStep};
use crate::dataset::{self, TimeSeries};
use crate::error::{Error, Result};
use crate::moisture::ModelConfig;
use crate::rnn::{self, RnnWeights, TrainConfig};

/// Settings shared by the pipeline commands. `dt` always comes from the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub time_lag: f64,
    /// Learning/forecast boundary; defaults to two thirds of the series.
    pub split: Option<usize>,
    pub filter: FilterConfig,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            time_lag: ModelConfig::default().time_lag,
            split: None,
            filter: FilterConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn model(&self, series: &TimeSeries) -> Result<ModelConfig> {
        ModelConfig::new(self.time_lag, series.dt())
    }

    /// Apply the configured split, if any.
    pub fn apply_split(&self, series: TimeSeries) -> Result<TimeSeries> {
        match self.split {
            Some(k) => series.with_split(k),
            None => Ok(series),
        }
    }
}

/// Summary of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    /// `None` when the range has nothing to score against.
    pub rmse_learning: Option<f64>,
    pub rmse_forecast: Option<f64>,
    /// Final equilibrium correction of the filter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_final: Option<f64>,
    /// Mean training loss per epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_history: Option<Vec<f64>>,
    /// What was scored against: `truth` or `observations`.
    pub scored_against: String,
    /// Index of the first forecast step.
    pub split: usize,
    pub config: PipelineConfig,
    pub seed: u64,
}

/// Root-mean-square error over the indices where `target` is present.
/// `None` if no index has a target.
pub fn rmse(pred: &[f64], target: &[Option<f64>]) -> Option<f64> {
    let (sum, n) = pred
        .iter()
        .zip(target)
        .filter_map(|(p, t)| t.map(|t| (p - t) * (p - t)))
        .fold((0.0, 0usize), |(s, n), e| (s + e, n + 1));
    (n > 0).then(|| (sum / n as f64).sqrt())
}

/// Per-step scoring target: the truth when known, otherwise every recorded
/// observation (learning readings and held-out readings alike).
pub fn scoring_target(series: &TimeSeries, truth: Option<&[f64]>) -> (Vec<Option<f64>>, &'static str) {
    match truth {
        Some(t) => (t.iter().copied().map(Some).collect(), "truth"),
        None => (series.samples().iter().map(|s| s.obs).collect(), "observations"),
    }
}

fn score(series: &TimeSeries, truth: Option<&[f64]>, pred: &[f64]) -> (Option<f64>, Option<f64>, &'static str) {
    let (target, label) = scoring_target(series, truth);
    let k = series.split_index();
    (rmse(&pred[..k], &target[..k]), rmse(&pred[k..], &target[k..]), label)
}

fn check_truth(series: &TimeSeries, truth: Option<&[f64]>) -> Result<()> {
    match truth {
        Some(t) if t.len() != series.len() => Err(Error::domain(
            "truth",
            format!("{} values for a series of {}", t.len(), series.len()),
        )),
        _ => Ok(()),
    }
}

/// Filter output over the whole series.
#[derive(Debug, Clone, PartialEq)]
pub struct KfRun {
    pub report: RunReport,
    /// Filtered states over the learning range.
    pub learning: Vec<FilterStep>,
    /// Moisture at every step: filtered on the learning range, free-running after.
    pub prediction: Vec<f64>,
    /// ΔE at every step; frozen over the forecast range.
    pub de: Vec<f64>,
    /// Covariance at every step; propagated without analyses over the forecast range.
    pub cov: Vec<Covariance2>,
}

/// Learning phase with the filter, then a forecast from its final state.
pub fn run_kf(series: &TimeSeries, truth: Option<&[f64]>, cfg: &PipelineConfig) -> Result<KfRun> {
    check_truth(series, truth)?;
    let model = cfg.model(series)?;
    let (learn, fore) = dataset::split(series);
    let learning = assimilation::run_learning(learn.samples(), &model, &cfg.filter)?;
    let last = *learning.last().expect("learning range is non-empty");

    // forecast from the last learning step across the remaining intervals
    let all_eqs = dataset::features(series)?;
    let eqs = &all_eqs[series.split_index() - 1..series.len() - 1];
    let free = assimilation::run_forecast(last.state, eqs, &model);

    let mut prediction: Vec<f64> = learning.iter().map(|s| s.state.m).collect();
    prediction.extend_from_slice(&free[1..]);
    let mut de: Vec<f64> = learning.iter().map(|s| s.state.de).collect();
    de.resize(series.len(), last.state.de);
    let mut cov: Vec<Covariance2> = learning.iter().map(|s| s.cov).collect();
    let (mut state, mut p) = (last.state, last.cov);
    for eq in eqs {
        (state, p) = assimilation::forecast_step(state, p, *eq, &model, &cfg.filter);
        cov.push(p);
    }
    debug_assert_eq!(fore.len(), eqs.len());

    let (rmse_learning, rmse_forecast, label) = score(series, truth, &prediction);
    log::info!(
        "kf: dE = {:.4}, rmse learning {:?}, forecast {:?}",
        last.state.de,
        rmse_learning,
        rmse_forecast
    );
    Ok(KfRun {
        report: RunReport {
            method: "kf".into(),
            rmse_learning,
            rmse_forecast,
            de_final: Some(last.state.de),
            loss_history: None,
            scored_against: label.into(),
            split: series.split_index(),
            config: cfg.clone(),
            seed: cfg.train.seed,
        },
        learning,
        prediction,
        de,
        cov,
    })
}

/// Initial hidden state: every unit set to the starting moisture of the learning range.
pub fn initial_hidden(series: &TimeSeries, h: usize) -> Result<Vec<f64>> {
    let m0 = assimilation::initial_moisture(series.learning().samples())?;
    Ok(vec![m0; h])
}

/// Network prediction at every step: the output of the initial hidden state,
/// then one output per consumed input.
pub fn rnn_prediction(series: &TimeSeries, w: &RnnWeights) -> Result<Vec<f64>> {
    let h0 = initial_hidden(series, w.h)?;
    let eqs = dataset::features(series)?;
    let mut pred = Vec::with_capacity(series.len());
    pred.push(rnn::output(w, &h0));
    pred.extend(rnn::evaluate_sequence(w, &h0, &eqs[..series.len() - 1]));
    Ok(pred)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnRun {
    pub report: RunReport,
    pub weights: RnnWeights,
    pub prediction: Vec<f64>,
}

/// Initialize, train on the learning range, then evaluate statelessly over
/// the whole series.
pub fn train_rnn(series: &TimeSeries, truth: Option<&[f64]>, cfg: &PipelineConfig) -> Result<RnnRun> {
    check_truth(series, truth)?;
    let model = cfg.model(series)?;
    let tcfg = &cfg.train;
    tcfg.validate()?;
    let w0 = rnn::init_euler(tcfg.hidden, &model, tcfg.init_mode, &tcfg.timescales)?;
    let h0 = initial_hidden(series, tcfg.hidden)?;

    let learn = series.learning();
    let eqs = learn.features()?;
    let n = learn.len();
    // output after input k is scored against the reading at k + 1
    let targets: Vec<Option<f64>> = (1..n).map(|k| learn.obs(k)).collect();
    let outcome = rnn::train(&w0, &h0, &eqs[..n - 1], &targets, tcfg)?;

    let prediction = rnn_prediction(series, &outcome.weights)?;
    let (rmse_learning, rmse_forecast, label) = score(series, truth, &prediction);
    log::info!(
        "rnn: final loss {:?}, rmse learning {:?}, forecast {:?}",
        outcome.loss_history.last(),
        rmse_learning,
        rmse_forecast
    );
    Ok(RnnRun {
        report: RunReport {
            method: "rnn".into(),
            rmse_learning,
            rmse_forecast,
            de_final: None,
            loss_history: Some(outcome.loss_history),
            scored_against: label.into(),
            split: series.split_index(),
            config: cfg.clone(),
            seed: tcfg.seed,
        },
        weights: outcome.weights,
        prediction,
    })
}

/// Stateless evaluation of saved weights over the whole series.
pub fn predict_rnn(series: &TimeSeries, truth: Option<&[f64]>, w: &RnnWeights, cfg: &PipelineConfig) -> Result<RnnRun> {
    check_truth(series, truth)?;
    w.validate()?;
    if (w.dt - series.dt()).abs() > dataset::SPACING_TOL {
        return Err(Error::domain(
            "weights",
            format!("built for dt = {} h, series has dt = {} h", w.dt, series.dt()),
        ));
    }
    let prediction = rnn_prediction(series, w)?;
    let (rmse_learning, rmse_forecast, label) = score(series, truth, &prediction);
    Ok(RnnRun {
        report: RunReport {
            method: "rnn".into(),
            rmse_learning,
            rmse_forecast,
            de_final: None,
            loss_history: None,
            scored_against: label.into(),
            split: series.split_index(),
            config: cfg.clone(),
            seed: cfg.train.seed,
        },
        weights: w.clone(),
        prediction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub kf: RunReport,
    pub rnn: RunReport,
    /// `"rnn"`, `"kf"`, `"tie"`, or `None` when the forecast range could not be scored.
    pub winner_forecast_rmse: Option<String>,
}

pub struct CompareRun {
    pub comparison: Comparison,
    pub kf: KfRun,
    pub rnn: RnnRun,
}

/// Run both pipelines on the same split.
pub fn compare(series: &TimeSeries, truth: Option<&[f64]>, cfg: &PipelineConfig) -> Result<CompareRun> {
    let (kf, rnn) = std::thread::scope(|s| {
        let kf = s.spawn(|| run_kf(series, truth, cfg));
        let rnn = train_rnn(series, truth, cfg);
        (kf.join().expect("filter thread panicked"), rnn)
    });
    let (kf, rnn) = (kf?, rnn?);
    let winner = match (kf.report.rmse_forecast, rnn.report.rmse_forecast) {
        (Some(k), Some(r)) if r < k => Some("rnn".to_string()),
        (Some(k), Some(r)) if k < r => Some("kf".to_string()),
        (Some(_), Some(_)) => Some("tie".to_string()),
        _ => None,
    };
    Ok(CompareRun {
        comparison: Comparison {
            kf: kf.report.clone(),
            rnn: rnn.report.clone(),
            winner_forecast_rmse: winner,
        },
        kf,
        rnn,
    })
}

// ---- file emission ----

fn fmt(v: f64) -> String {
    v.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `time, m_model, dE, p00, p11[, obs][, truth]`; `obs` only if the series has
/// readings, `truth` only if given.
pub fn write_kf_trajectory(path: &Path, series: &TimeSeries, truth: Option<&[f64]>, run: &KfRun) -> Result<()> {
    let with_obs = series.samples().iter().any(|s| s.obs.is_some());
    let mut header = vec!["time", "m_model", "dE", "p00", "p11"];
    if with_obs {
        header.push("obs");
    }
    if truth.is_some() {
        header.push("truth");
    }
    let rows = series
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = run.cov[k].0;
            let mut row = vec![
                fmt(s.time),
                fmt(run.prediction[k]),
                fmt(run.de[k]),
                fmt(p[0][0]),
                fmt(p[1][1]),
            ];
            if with_obs {
                row.push(fmt_opt(s.obs));
            }
            if let Some(t) = truth {
                row.push(fmt(t[k]));
            }
            row
        })
        .collect();
    write_csv(path, &header, rows)
}

/// `time, rnn_pred, obs, truth` with empty cells where a value is absent.
pub fn write_rnn_trajectory(path: &Path, series: &TimeSeries, truth: Option<&[f64]>, pred: &[f64]) -> Result<()> {
    let rows = series
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| vec![fmt(s.time), fmt(pred[k]), fmt_opt(s.obs), fmt_opt(truth.map(|t| t[k]))])
        .collect();
    write_csv(path, &["time", "rnn_pred", "obs", "truth"], rows)
}

/// `time, truth, obs, kf_pred, rnn_pred`.
pub fn write_comparison(path: &Path, series: &TimeSeries, truth: Option<&[f64]>, run: &CompareRun) -> Result<()> {
    let rows = series
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                fmt(s.time),
                fmt_opt(truth.map(|t| t[k])),
                fmt_opt(s.obs),
                fmt(run.kf.prediction[k]),
                fmt(run.rnn.prediction[k]),
            ]
        })
        .collect();
    write_csv(path, &["time", "truth", "obs", "kf_pred", "rnn_pred"], rows)
}

/// A matplotlib script that plots `compare.csv`; not run by this crate.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot compare.csv written by `fmda compare`."""
import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
rows = list(csv.DictReader(open(out / "compare.csv")))
report = json.load(open(out / "compare.json"))


def col(name):
    return [float(r[name]) if r[name] else float("nan") for r in rows]


t = col("time")
fig, ax = plt.subplots(figsize=(12, 4))
ax.plot(t, col("truth"), "k-", lw=1, label="truth")
ax.plot(t, col("obs"), ".", ms=2, color="gray", label="observations")
ax.plot(t, col("kf_pred"), label="time-lag model + EKF")
ax.plot(t, col("rnn_pred"), label="RNN")
ax.axvline(t[report["kf"]["split"]], color="red", ls="--", lw=1)
ax.set_xlabel("hours")
ax.set_ylabel("fuel moisture (%)")
ax.legend()
fig.tight_layout()
fig.savefig(out / "compare.png", dpi=150)
"#;
