//! Time series for the experiments: a seeded synthetic generator, CSV
//! ingestion of station records, and the learning/forecast split.
//!
//! Observations in the forecast range are kept for scoring only. The
//! [`Phase`] returned for the forecast range never exposes them.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moisture::{self, AtmosphericSample, EquilibriumPair, ModelConfig};

/// Allowed deviation from uniform spacing, hours.
pub const SPACING_TOL: f64 = 1e-9;

pub const CSV_COLUMNS: [&str; 4] = ["time_hours", "temp_k", "rh_pct", "fmc_pct"];
pub const TRUTH_COLUMNS: [&str; 2] = ["time_hours", "fmc_true_pct"];

/// Uniformly spaced samples with a learning/forecast split index.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<AtmosphericSample>,
    dt: f64,
    split: usize,
}

/// Default split: the first two thirds of the series are the learning range.
pub fn default_split(len: usize) -> usize {
    ((2 * len) as f64 / 3.0)
        .round()
        .clamp(1.0, len.saturating_sub(1).max(1) as f64) as usize
}

impl TimeSeries {
    pub fn new(samples: Vec<AtmosphericSample>, split: usize) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain("samples", "a series needs at least two samples"));
        }
        for s in &samples {
            s.validate()?;
        }
        let dt = samples[1].time - samples[0].time;
        if !(dt > 0.0) {
            return Err(Error::domain("time", "times must be strictly increasing"));
        }
        if let Some(k) = spacing_violation(&samples, dt) {
            return Err(Error::domain(
                "time",
                format!("non-uniform spacing at sample {k} (time {})", samples[k].time),
            ));
        }
        let series = TimeSeries { samples, dt, split: 0 };
        series.with_split(split)
    }

    pub fn with_split(mut self, split: usize) -> Result<Self> {
        if split == 0 || split >= self.samples.len() {
            return Err(Error::domain(
                "split",
                format!("{split} is not inside (0, {})", self.samples.len()),
            ));
        }
        self.split = split;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn split_index(&self) -> usize {
        self.split
    }

    /// All samples including held-out observations. Use [`split`] to hand
    /// data to models.
    pub fn samples(&self) -> &[AtmosphericSample] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Observations in the forecast range, for scoring.
    pub fn holdout_obs(&self) -> Vec<Option<f64>> {
        self.samples[self.split..].iter().map(|s| s.obs).collect()
    }

    pub fn learning(&self) -> Phase {
        Phase {
            start: 0,
            samples: self.samples[..self.split].to_vec(),
        }
    }

    pub fn forecast(&self) -> Phase {
        Phase {
            start: self.split,
            samples: self.samples[self.split..]
                .iter()
                .map(|s| AtmosphericSample { obs: None, ..*s })
                .collect(),
        }
    }
}

/// Index of the first sample whose gap to its predecessor is not `dt`.
fn spacing_violation(samples: &[AtmosphericSample], dt: f64) -> Option<usize> {
    samples
        .windows(2)
        .position(|p| ((p[1].time - p[0].time) - dt).abs() > SPACING_TOL)
        .map(|k| k + 1)
}

/// A contiguous range of a series as seen by a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    /// Index of the first sample in the parent series.
    pub start: usize,
    samples: Vec<AtmosphericSample>,
}

impl Phase {
    pub fn samples(&self) -> &[AtmosphericSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn obs(&self, k: usize) -> Option<f64> {
        self.samples.get(k).and_then(|s| s.obs)
    }

    pub fn features(&self) -> Result<Vec<EquilibriumPair>> {
        features_of(&self.samples)
    }
}

/// Learning and forecast ranges of `series`.
pub fn split(series: &TimeSeries) -> (Phase, Phase) {
    (series.learning(), series.forecast())
}

/// Drying/wetting equilibria at every sample.
pub fn features(series: &TimeSeries) -> Result<Vec<EquilibriumPair>> {
    features_of(&series.samples)
}

fn features_of(samples: &[AtmosphericSample]) -> Result<Vec<EquilibriumPair>> {
    samples.iter().map(AtmosphericSample::equilibria).collect()
}

/// A humidity excursion over a range of steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anomaly {
    /// First affected step.
    pub start: usize,
    /// One past the last affected step.
    pub end: usize,
    /// Added to relative humidity, percent.
    pub rh_offset: f64,
}

/// Parameters of a synthetic scenario.
///
/// The anomaly is weather the fuel experiences but the recorded humidity does
/// not show, as when the station sits away from the fuel bed or the
/// atmospheric analysis misses a local event. It perturbs the truth only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_steps: usize,
    pub dt: f64,
    /// Learning/forecast boundary.
    pub split: usize,
    pub true_de: f64,
    pub obs_sigma: f64,
    pub m0: f64,
    pub rh_mean: f64,
    pub rh_amp: f64,
    pub temp_mean: f64,
    pub temp_amp: f64,
    pub period: f64,
    pub seed: u64,
    pub anomaly: Option<Anomaly>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_steps: 1000,
            dt: 1.0,
            split: 667,
            true_de: 1.0,
            obs_sigma: 0.3,
            m0: 10.0,
            rh_mean: 40.0,
            rh_amp: 25.0,
            temp_mean: 295.0,
            temp_amp: 8.0,
            period: 24.0,
            seed: 0,
            anomaly: Some(Anomaly {
                start: 300,
                end: 600,
                rh_offset: 20.0,
            }),
        }
    }
}

impl SynthConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("dt", self.dt),
            ("true_de", self.true_de),
            ("obs_sigma", self.obs_sigma),
            ("m0", self.m0),
            ("rh_mean", self.rh_mean),
            ("rh_amp", self.rh_amp),
            ("temp_mean", self.temp_mean),
            ("temp_amp", self.temp_amp),
            ("period", self.period),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::domain(field, format!("{v} is not finite")));
            }
        }
        if self.n_steps < 2 {
            return Err(Error::domain("n_steps", "need at least 2 steps"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::domain("dt", "must be positive"));
        }
        if self.split == 0 || self.split >= self.n_steps {
            return Err(Error::domain(
                "split",
                format!("{} is not inside (0, {})", self.split, self.n_steps),
            ));
        }
        if self.obs_sigma < 0.0 {
            return Err(Error::domain("obs_sigma", "must be non-negative"));
        }
        if self.m0 < 0.0 {
            return Err(Error::domain("m0", "must be non-negative"));
        }
        if self.rh_amp < 0.0 || self.rh_mean - self.rh_amp < 0.0 || self.rh_mean + self.rh_amp > 100.0 {
            return Err(Error::domain(
                "rh_amp",
                format!("{}±{} leaves [0, 100]", self.rh_mean, self.rh_amp),
            ));
        }
        if self.temp_amp < 0.0 || self.temp_mean - self.temp_amp <= 0.0 {
            return Err(Error::domain(
                "temp_amp",
                format!("{}±{} K is not positive", self.temp_mean, self.temp_amp),
            ));
        }
        if !(self.period > 0.0) {
            return Err(Error::domain("period", "must be positive"));
        }
        if let Some(a) = self.anomaly {
            if a.start >= a.end || a.end > self.n_steps {
                return Err(Error::domain(
                    "anomaly",
                    format!("window [{}, {}) is empty or outside the series", a.start, a.end),
                ));
            }
            if !a.rh_offset.is_finite() {
                return Err(Error::domain("anomaly", "rh_offset is not finite"));
            }
        }
        Ok(())
    }

    fn weather(&self, k: usize) -> (f64, f64, f64) {
        let t = k as f64 * self.dt;
        let phase = (2.0 * PI * t / self.period).sin();
        let rh = self.rh_mean + self.rh_amp * phase;
        let temp = self.temp_mean - self.temp_amp * phase;
        (t, temp, rh)
    }

    fn felt_rh(&self, k: usize, rh: f64) -> f64 {
        match self.anomaly {
            Some(a) if (a.start..a.end).contains(&k) => (rh + a.rh_offset).clamp(0.0, 100.0),
            _ => rh,
        }
    }
}

/// A generated scenario: the observable series and the true moisture at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub series: TimeSeries,
    pub truth: Vec<f64>,
}

/// Generate a scenario. The truth depends only on the weather, `m0`, and
/// `true_de`; the seed drives only the observation noise.
pub fn synth(cfg: &SynthConfig, model: &ModelConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let model = ModelConfig { dt: cfg.dt, ..*model };
    model.validate()?;

    let weather: Vec<_> = (0..cfg.n_steps).map(|k| cfg.weather(k)).collect();
    let forcing = weather
        .iter()
        .enumerate()
        .map(|(k, &(_, temp, rh))| moisture::equilibria(temp, cfg.felt_rh(k, rh)))
        .collect::<Result<Vec<_>>>()?;
    let truth = moisture::simulate(cfg.m0, cfg.true_de, &forcing[..cfg.n_steps - 1], &model)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.obs_sigma).map_err(|e| Error::domain("obs_sigma", e.to_string()))?;
    let samples = weather
        .iter()
        .zip(&truth)
        .enumerate()
        .map(|(k, (&(time, temp, rh), &m))| {
            let obs = (k < cfg.split).then(|| (m + noise.sample(&mut rng)).max(0.0));
            AtmosphericSample { time, temp, rh, obs }
        })
        .collect();
    Ok(Synthetic {
        series: TimeSeries::new(samples, cfg.split)?,
        truth,
    })
}

fn csv_err(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column_indices<const N: usize>(
    path: &Path,
    reader: &mut csv::Reader<fs::File>,
    names: [&str; N],
) -> Result<[usize; N]> {
    let headers = reader.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    let mut idx = [0; N];
    for (slot, name) in idx.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(path, 1, format!("missing column `{name}`")))?;
    }
    Ok(idx)
}

fn parse_cell(path: &Path, line: u64, column: &str, cell: Option<&str>) -> Result<Option<f64>> {
    match cell {
        None => Err(csv_err(path, line, format!("missing value for `{column}`"))),
        Some("") => Ok(None),
        Some(text) => text
            .parse::<f64>()
            .map(Some)
            .map_err(|_| csv_err(path, line, format!("cannot parse `{text}` as a number in `{column}`"))),
    }
}

fn required(path: &Path, line: u64, column: &str, cell: Option<&str>) -> Result<f64> {
    parse_cell(path, line, column, cell)?.ok_or_else(|| csv_err(path, line, format!("empty `{column}`")))
}

/// Read a station series. `fmc_pct` may be empty for steps without a reading.
/// The split defaults to [`default_split`].
pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    let mut reader = open_csv(path)?;
    let [ti, te, rh, fmc] = column_indices(path, &mut reader, CSV_COLUMNS)?;
    let mut samples: Vec<AtmosphericSample> = Vec::new();
    let mut dt = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let sample = AtmosphericSample {
            time: required(path, line, CSV_COLUMNS[0], record.get(ti))?,
            temp: required(path, line, CSV_COLUMNS[1], record.get(te))?,
            rh: required(path, line, CSV_COLUMNS[2], record.get(rh))?,
            obs: parse_cell(path, line, CSV_COLUMNS[3], record.get(fmc))?,
        };
        sample.validate().map_err(|e| csv_err(path, line, e.to_string()))?;
        if let Some(prev) = samples.last() {
            let gap = sample.time - prev.time;
            if !(gap > 0.0) {
                return Err(csv_err(
                    path,
                    line,
                    format!("time {} is not after {}", sample.time, prev.time),
                ));
            }
            let expected = *dt.get_or_insert(gap);
            if (gap - expected).abs() > SPACING_TOL {
                return Err(csv_err(
                    path,
                    line,
                    format!("non-uniform spacing: gap {gap} h, expected {expected} h"),
                ));
            }
        }
        samples.push(sample);
    }
    let split = default_split(samples.len());
    TimeSeries::new(samples, split).map_err(|e| csv_err(path, 0, e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let io = |e: csv::Error| Error::io(path, e.into());
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Write every sample, held-out observations included. Values are printed
/// with shortest round-trip precision.
pub fn save_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    write_rows(
        path,
        &CSV_COLUMNS,
        series
            .samples
            .iter()
            .map(|s| vec![s.time.to_string(), s.temp.to_string(), s.rh.to_string(), fmt_opt(s.obs)]),
    )
}

pub fn save_truth(times: &[f64], truth: &[f64], path: &Path) -> Result<()> {
    write_rows(
        path,
        &TRUTH_COLUMNS,
        times.iter().zip(truth).map(|(t, m)| vec![t.to_string(), m.to_string()]),
    )
}

/// Read a truth file and check it lines up with `series`.
pub fn load_truth(path: &Path, series: &TimeSeries) -> Result<Vec<f64>> {
    let mut reader = open_csv(path)?;
    let [ti, mi] = column_indices(path, &mut reader, TRUTH_COLUMNS)?;
    let mut truth = Vec::with_capacity(series.len());
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let time = required(path, line, TRUTH_COLUMNS[0], record.get(ti))?;
        let m = required(path, line, TRUTH_COLUMNS[1], record.get(mi))?;
        match series.samples.get(k) {
            Some(s) if (s.time - time).abs() <= SPACING_TOL => truth.push(m),
            _ => return Err(csv_err(path, line, format!("time {time} does not match the series"))),
        }
    }
    if truth.len() != series.len() {
        return Err(csv_err(
            path,
            0,
            format!("{} truth rows for a series of {}", truth.len(), series.len()),
        ));
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn quiet() -> SynthConfig {
        SynthConfig {
            n_steps: 120,
            split: 80,
            anomaly: None,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn noiseless_observations_equal_truth() {
        let cfg = SynthConfig {
            obs_sigma: 0.0,
            ..quiet()
        };
        let out = synth(&cfg, &ModelConfig::default()).unwrap();
        for (k, s) in out.series.samples().iter().enumerate() {
            if k < cfg.split {
                assert_eq!(s.obs, Some(out.truth[k]));
            } else {
                assert_eq!(s.obs, None);
            }
        }
    }

    #[test]
    fn seeds_change_noise_only() {
        let model = ModelConfig::default();
        let a = synth(&SynthConfig { seed: 1, ..quiet() }, &model).unwrap();
        let b = synth(&SynthConfig { seed: 1, ..quiet() }, &model).unwrap();
        let c = synth(&SynthConfig { seed: 2, ..quiet() }, &model).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.truth, c.truth);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn truth_follows_the_step_recursion() {
        let cfg = SynthConfig::default();
        let model = ModelConfig::default();
        let out = synth(&cfg, &model).unwrap();
        for k in 0..cfg.n_steps - 1 {
            let (_, temp, rh) = cfg.weather(k);
            let eq = moisture::equilibria(temp, cfg.felt_rh(k, rh)).unwrap();
            assert_eq!(out.truth[k + 1], moisture::step(out.truth[k], cfg.true_de, eq, &model));
        }
    }

    #[test]
    fn features_repeat_each_period() {
        let out = synth(&quiet(), &ModelConfig::default()).unwrap();
        let f = features(&out.series).unwrap();
        assert_eq!(f.len(), out.series.len());
        for k in 0..f.len() - 24 {
            assert!((f[k].ed - f[k + 24].ed).abs() < 1e-9);
            assert!(f[k].ew <= f[k].ed);
        }
        // half a period apart the humidity swings to the other side of its mean
        assert!((f[6].ed - f[18].ed).abs() > 1.0);
    }

    #[test]
    fn constant_weather_constant_features() {
        let cfg = SynthConfig {
            rh_amp: 0.0,
            temp_amp: 0.0,
            ..quiet()
        };
        let f = features(&synth(&cfg, &ModelConfig::default()).unwrap().series).unwrap();
        assert!(f.iter().all(|e| *e == f[0]));
    }

    #[test]
    fn config_errors_name_the_field() {
        let cases = [
            (
                SynthConfig {
                    rh_amp: 70.0,
                    ..quiet()
                },
                "rh_amp",
            ),
            (
                SynthConfig {
                    obs_sigma: -0.1,
                    ..quiet()
                },
                "obs_sigma",
            ),
            (SynthConfig { split: 120, ..quiet() }, "split"),
            (
                SynthConfig {
                    temp_mean: 5.0,
                    temp_amp: 6.0,
                    ..quiet()
                },
                "temp_amp",
            ),
        ];
        for (cfg, field) in cases {
            match cfg.validate() {
                Err(Error::Domain { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
        assert!(matches!(
            SynthConfig::from_json(r#"{"n_stepz": 4}"#, "cfg"),
            Err(Error::Json { .. })
        ));
        let cfg = SynthConfig::from_json(r#"{"n_steps": 50, "split": 30, "anomaly": null}"#, "cfg").unwrap();
        assert_eq!((cfg.n_steps, cfg.split, cfg.anomaly), (50, 30, None));
    }

    #[test]
    fn split_ranges() {
        let out = synth(&quiet(), &ModelConfig::default()).unwrap();
        let series = out.series.clone().with_split(1).unwrap();
        let (learn, fore) = split(&series);
        assert_eq!(learn.len(), 1);
        let joined: Vec<_> = learn
            .samples()
            .iter()
            .chain(fore.samples())
            .map(|s| (s.time, s.temp, s.rh))
            .collect();
        let orig: Vec<_> = series.samples().iter().map(|s| (s.time, s.temp, s.rh)).collect();
        assert_eq!(joined, orig);
        assert!(series.with_split(0).is_err());
    }

    #[test]
    fn forecast_phase_hides_observations() {
        let samples: Vec<_> = (0..6)
            .map(|k| AtmosphericSample::new(k as f64, 290.0, 50.0, Some(10.0 + k as f64)).unwrap())
            .collect();
        let series = TimeSeries::new(samples, 4).unwrap();
        let (learn, fore) = split(&series);
        assert_eq!(learn.obs(3), Some(13.0));
        assert!((0..fore.len()).all(|k| fore.obs(k).is_none()));
        assert!(fore.samples().iter().all(|s| s.obs.is_none()));
        assert_eq!(series.holdout_obs(), vec![Some(14.0), Some(15.0)]);
    }

    fn write_file(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let out = synth(
            &SynthConfig {
                n_steps: 30,
                split: 20,
                ..quiet()
            },
            &ModelConfig::default(),
        )
        .unwrap();
        let path = dir.path().join("s.csv");
        save_csv(&out.series, &path).unwrap();
        let back = load_csv(&path).unwrap().with_split(20).unwrap();
        assert_eq!(back, out.series);

        let tpath = dir.path().join("t.csv");
        save_truth(&out.series.times(), &out.truth, &tpath).unwrap();
        assert_eq!(load_truth(&tpath, &out.series).unwrap(), out.truth);
    }

    #[test]
    fn csv_gap_is_reported_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let text = "time_hours,temp_k,rh_pct,fmc_pct\n0,290,50,10\n1,290,50,\n3,290,50,11\n";
        let err = load_csv(&write_file(dir.path(), "gap.csv", text)).unwrap_err();
        match err {
            Error::Csv { line, reason, .. } => {
                assert_eq!(line, 4);
                assert!(reason.contains("non-uniform"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = write_file(dir.path(), "m.csv", "time_hours,temp_k,fmc_pct\n0,290,1\n");
        assert!(matches!(load_csv(&missing), Err(Error::Csv { line: 1, .. })));
        let bad = write_file(
            dir.path(),
            "b.csv",
            "time_hours,temp_k,rh_pct,fmc_pct\n0,290,50,1\n1,29x,50,1\n",
        );
        match load_csv(&bad) {
            Err(Error::Csv { line, reason, .. }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("29x"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_csv(&dir.path().join("nope.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_empty_cells_are_absent_observations() {
        let dir = tempfile::tempdir().unwrap();
        let text = "time_hours,temp_k,rh_pct,fmc_pct\n0,290,50,10\n1,291,48,\n2,292,46,9.5\n3,293,44,\n";
        let series = load_csv(&write_file(dir.path(), "e.csv", text)).unwrap();
        let obs: Vec<_> = series.samples().iter().map(|s| s.obs).collect();
        assert_eq!(obs, vec![Some(10.0), None, Some(9.5), None]);
        assert_eq!(series.split_index(), 3);
    }
}
