//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Profile, SynthSpec};
use crate::config::RunConfig;
use crate::csvio;

#[derive(Debug, Parser)]
#[command(name = "dayahead", version, about = "Day-ahead forecasting of server KPI series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Every option here can also be set in the `--config` file under the same
/// name (`k-max = 50`); flags win.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// MetricCsv input.
    #[arg(long, global = true)]
    pub input: Option<String>,
    #[arg(long, global = true)]
    pub output_dir: Option<String>,
    /// Samples per day [default: 96].
    #[arg(long = "h", global = true)]
    pub h: Option<String>,
    /// Smallest cluster count tried [default: 2].
    #[arg(long, global = true)]
    pub k_min: Option<String>,
    /// Largest cluster count tried [default: 200].
    #[arg(long, global = true)]
    pub k_max: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Train, validation and test fractions [default: 0.7,0.15,0.15].
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// Comma-separated subset of dayahead,meanday,omniscient,ar,hw.
    #[arg(long, global = true)]
    pub methods: Option<String>,
    /// univariate (one backtest per column) or multivariate [default: univariate].
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    /// AR lag count [default: h].
    #[arg(long, global = true)]
    pub ar_order: Option<String>,
    /// Comma-separated Holt-Winters parameter candidates.
    #[arg(long, global = true)]
    pub hw_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and save it as JSON.
    Train {
        /// Fixed cluster count; omitted, k is chosen on a validation split.
        #[arg(long)]
        k: Option<String>,
        /// Model path [default: <output-dir>/model.json].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Forecast the day after a one-day MetricCsv.
    Forecast {
        #[arg(long)]
        model: Option<String>,
        /// Forecast CSV path [default: <output-dir>/forecast.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Backtest the forecasters and write report.json, report.txt and errors.csv.
    Evaluate,
    /// Pool saved report JSONs into one summary table.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the pooled report as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic MetricCsv.
    Synth {
        #[arg(long, value_enum, default_value = "weekly")]
        profile: Profile,
        #[arg(long, default_value_t = 70)]
        days: usize,
        #[arg(long, default_value_t = 1)]
        dims: usize,
        /// Standard deviation of additive Gaussian noise.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Number of shapes for planted-k.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// CSV path [default: <output-dir>/synth.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("input", &self.input),
            ("output-dir", &self.output_dir),
            ("h", &self.h),
            ("k-min", &self.k_min),
            ("k-max", &self.k_max),
            ("seed", &self.seed),
            ("split", &self.split),
            ("methods", &self.methods),
            ("mode", &self.mode),
            ("jobs", &self.jobs),
            ("ar-order", &self.ar_order),
            ("hw-grid", &self.hw_grid),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn require_input(cfg: &RunConfig) -> Result<PathBuf> {
    match &cfg.input {
        Some(p) => Ok(p.clone()),
        None => bail!("no input file; pass --input or set 'input' in the config file"),
    }
}

fn out_path(explicit: &Option<PathBuf>, cfg: &RunConfig, default: &str) -> Result<PathBuf> {
    let path = explicit.clone().unwrap_or_else(|| cfg.output_dir.join(default));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

pub fn run<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let mut cfg = cli.common.resolve()?;

    match &cli.command {
        Command::Train { k, output } => {
            if let Some(k) = k {
                cfg.set("k", k)?;
            }
            let input = require_input(&cfg)?;
            let series = commands::ingest(&input)?;
            let model = commands::train_model(&series, &cfg)?;
            let path = out_path(output, &cfg, "model.json")?;
            fs::write(&path, model.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "trained k = {} on {} days × {} metrics -> {}",
                model.selected_k,
                series.len() / model.h,
                model.p,
                path.display()
            );
        }
        Command::Forecast { model, output } => {
            if let Some(m) = model {
                cfg.set("model", m)?;
            }
            let model_path = match &cfg.model {
                Some(p) => p.clone(),
                None => bail!("no model; pass --model or set 'model' in the config file"),
            };
            let model = commands::load_model(&model_path)?;
            let day = commands::ingest(&require_input(&cfg)?)?;
            let (series, forecast) = commands::forecast_next_day(&model, &day)?;
            let path = out_path(output, &cfg, "forecast.csv")?;
            csvio::write_csv(&path, &series).with_context(|| format!("writing {}", path.display()))?;
            let sidecar = path.with_extension("json");
            let meta = serde_json::json!({
                "predicted_cluster": forecast.predicted_cluster,
                "k": model.selected_k,
                "rows": model.h,
                "forecast": path.display().to_string(),
            });
            fs::write(&sidecar, serde_json::to_string_pretty(&meta)?)
                .with_context(|| format!("writing {}", sidecar.display()))?;
            println!("{meta}");
        }
        Command::Evaluate => {
            let input = require_input(&cfg)?;
            let series = commands::ingest(&input)?;
            let eval = commands::evaluate(&series, &cfg, &commands::dataset_id(&input))?;
            commands::write_evaluation(&eval, &cfg.output_dir)?;
            print!("{}", eval.aggregate.to_table());
        }
        Command::Compare { reports, output } => {
            let pooled = commands::compare(reports)?;
            if let Some(path) = output {
                fs::write(path, pooled.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", pooled.to_table());
        }
        Command::Synth {
            profile,
            days,
            dims,
            noise,
            k,
            output,
        } => {
            let spec = SynthSpec {
                profile: *profile,
                days: *days,
                h: cfg.h,
                dims: *dims,
                noise: *noise,
                seed: cfg.seed,
                k: *k,
            };
            let series = commands::synthesize(&spec)?;
            let path = out_path(output, &cfg, "synth.csv")?;
            csvio::write_csv(&path, &series).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} rows × {} metrics -> {}", series.len(), series.dims(), path.display());
        }
    }
    Ok(())
}
