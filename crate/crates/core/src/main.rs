use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fmda::dataset::{self, SynthConfig, TimeSeries};
use fmda::harness::{self, PipelineConfig};
use fmda::moisture::ModelConfig;
use fmda::rnn::{InitMode, RnnWeights};
use fmda::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fmda",
    version,
    about = "Fuel moisture: time-lag model + EKF vs. recurrent network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: series.csv and truth.csv.
    Synth {
        /// Scenario JSON (SynthConfig fields); defaults to the canonical scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Assimilate the learning range with the EKF, then forecast.
    RunKf(PipelineArgs),
    /// Train the recurrent network on the learning range and save its weights.
    TrainRnn {
        #[command(flatten)]
        common: PipelineArgs,
        /// Where to write the weights; defaults to <out>/weights.json.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Evaluate saved weights over the whole series.
    PredictRnn {
        #[command(flatten)]
        common: PipelineArgs,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Run both pipelines on the same split and compare forecasts.
    Compare(PipelineArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Series CSV: time_hours, temp_k, rh_pct, fmc_pct.
    #[arg(long)]
    series: PathBuf,
    /// Optional truth CSV (time_hours, fmc_true_pct) used for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Pipeline JSON (time_lag, split, filter, train).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    time_lag: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, value_enum)]
    init_mode: Option<InitModeArg>,
    #[arg(long, allow_hyphen_values = true)]
    q_m: Option<f64>,
    #[arg(long = "q-de", allow_hyphen_values = true)]
    q_de: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InitModeArg {
    Identical,
    MultiTimescale,
}

impl From<InitModeArg> for InitMode {
    fn from(m: InitModeArg) -> Self {
        match m {
            InitModeArg::Identical => InitMode::Identical,
            InitModeArg::MultiTimescale => InitMode::MultiTimescale,
        }
    }
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.split {
            cfg.split = Some(v);
        }
        if let Some(v) = self.time_lag {
            cfg.time_lag = v;
        }
        let t = &mut cfg.train;
        if let Some(v) = self.seed {
            t.seed = v;
        }
        if let Some(v) = self.window {
            t.window = v;
        }
        if let Some(v) = self.lr {
            t.lr = v;
        }
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.hidden {
            t.hidden = v;
        }
        if let Some(v) = self.init_mode {
            t.init_mode = v.into();
        }
        let f = &mut cfg.filter;
        if let Some(v) = self.q_m {
            f.q_m = v;
        }
        if let Some(v) = self.q_de {
            f.q_de = v;
        }
        if let Some(v) = self.r {
            f.r = v;
        }
        f.validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }

    fn load(&self) -> Result<(PipelineConfig, TimeSeries, Option<Vec<f64>>)> {
        let cfg = self.config()?;
        let series = cfg.apply_split(dataset::load_csv(&self.series)?)?;
        let truth = match &self.truth {
            Some(p) => Some(dataset::load_truth(p, &series)?),
            None => None,
        };
        create_dir(&self.out)?;
        Ok((cfg, series, truth))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out, seed } => {
            let mut cfg = match config {
                Some(p) => SynthConfig::load(&p)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let generated = dataset::synth(&cfg, &ModelConfig::default())?;
            create_dir(&out)?;
            dataset::save_csv(&generated.series, &out.join("series.csv"))?;
            dataset::save_truth(&generated.series.times(), &generated.truth, &out.join("truth.csv"))?;
            println!("wrote {} samples to {}", generated.series.len(), out.display());
        }
        Command::RunKf(args) => {
            let (cfg, series, truth) = args.load()?;
            let run = harness::run_kf(&series, truth.as_deref(), &cfg)?;
            harness::write_json(&run.report, &args.out.join("kf_report.json"))?;
            harness::write_kf_trajectory(&args.out.join("kf_trajectory.csv"), &series, truth.as_deref(), &run)?;
            print_summary(&run.report);
        }
        Command::TrainRnn { common, weights } => {
            let (cfg, series, truth) = common.load()?;
            let run = harness::train_rnn(&series, truth.as_deref(), &cfg)?;
            let path = weights.unwrap_or_else(|| common.out.join("weights.json"));
            run.weights.save(&path)?;
            harness::write_json(&run.report, &common.out.join("train_report.json"))?;
            print_summary(&run.report);
        }
        Command::PredictRnn { common, weights } => {
            let (cfg, series, truth) = common.load()?;
            let w = RnnWeights::load(&weights)?;
            let run = harness::predict_rnn(&series, truth.as_deref(), &w, &cfg)?;
            harness::write_json(&run.report, &common.out.join("rnn_report.json"))?;
            harness::write_rnn_trajectory(
                &common.out.join("rnn_trajectory.csv"),
                &series,
                truth.as_deref(),
                &run.prediction,
            )?;
            print_summary(&run.report);
        }
        Command::Compare(args) => {
            let (cfg, series, truth) = args.load()?;
            let run = harness::compare(&series, truth.as_deref(), &cfg)?;
            harness::write_json(&run.comparison, &args.out.join("compare.json"))?;
            harness::write_comparison(&args.out.join("compare.csv"), &series, truth.as_deref(), &run)?;
            let script = args.out.join("plot_compare.py");
            fs::write(&script, harness::PLOT_SCRIPT).map_err(|e| Error::Io {
                path: script,
                source: e,
            })?;
            print_summary(&run.comparison.kf);
            print_summary(&run.comparison.rnn);
            println!(
                "forecast winner: {}",
                run.comparison.winner_forecast_rmse.as_deref().unwrap_or("n/a")
            );
        }
    }
    Ok(())
}

fn print_summary(r: &harness::RunReport) {
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    print!(
        "{}: rmse learning {} forecast {} (vs {})",
        r.method,
        show(r.rmse_learning),
        show(r.rmse_forecast),
        r.scored_against
    );
    if let Some(de) = r.de_final {
        print!(", dE {de:.4}");
    }
    if let Some(l) = r.loss_history.as_ref().and_then(|h| h.last()) {
        print!(", final loss {l:.4e}");
    }
    println!();
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FMDA_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
