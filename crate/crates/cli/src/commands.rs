//! The work behind each subcommand, independent of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dayahead::{
    chrono_split, run_backtest, select_k, synth, train, DayAheadModel64, DayMatrix, EvalReport64, Forecast64,
    MultiSeries64,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{Mode, RunConfig};
use crate::csvio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Five busy weekdays, two quiet weekend days.
    Weekly,
    /// `k` random day shapes in a fixed cyclic order.
    PlantedK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub profile: Profile,
    pub days: usize,
    pub h: usize,
    pub dims: usize,
    pub noise: f64,
    pub seed: u64,
    pub k: usize,
}

pub fn synthesize(spec: &SynthSpec) -> Result<MultiSeries64> {
    let data = match spec.profile {
        Profile::Weekly => synth::weekly(spec.days, spec.h, spec.dims, spec.noise, spec.seed)?,
        Profile::PlantedK => synth::planted_k(spec.k, spec.days, spec.h, spec.dims, spec.noise, spec.seed)?,
    };
    Ok(data.series)
}

/// With `cfg.k` set, fits on the whole series. Otherwise k is chosen on the
/// validation block of a chronological split and the model is refit on the
/// whole series with that k.
pub fn train_model(series: &MultiSeries64, cfg: &RunConfig) -> Result<DayAheadModel64> {
    let k = match cfg.k {
        Some(k) => k,
        None => {
            let (tr, va, _) = chrono_split(series, &cfg.split, cfg.h)?;
            let (k, _) = select_k(&tr, &va, cfg.k_range()?, cfg.h, cfg.seed)?;
            info!("selected k = {k}");
            k
        }
    };
    Ok(train(series, k, cfg.h, cfg.seed)?)
}

pub fn load_model(path: &Path) -> Result<DayAheadModel64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    DayAheadModel64::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

/// Forecasts the day after the last `h` rows of `day`; returns the forecast
/// as a timestamped series alongside the raw forecast.
pub fn forecast_next_day(model: &DayAheadModel64, day: &MultiSeries64) -> Result<(MultiSeries64, Forecast64)> {
    let h = model.h;
    if day.dims() != model.p {
        bail!(
            "input has {} metric columns but the model was trained on {}",
            day.dims(),
            model.p
        );
    }
    if day.len() < h {
        bail!("input has {} rows; the model needs one full day of {h} rows", day.len());
    }
    if day.len() > h {
        info!("using the last {h} of {} input rows", day.len());
    }
    if !model.dim_names.is_empty() && day.dim_names() != model.dim_names.as_slice() {
        warn!("input column names differ from the model's; matching by position");
    }
    let current = day.slice_rows(day.len() - h, day.len())?;
    let forecast = model.forecast_next(&DayMatrix::new(current.values().to_vec(), h, model.p, 0)?)?;

    let step = day
        .sampling_interval()
        .or(model.sampling_interval)
        .unwrap_or(86_400 / h as i64);
    let last = current.timestamps().map_or(0, |ts| ts[h - 1]);
    let stamps = (1..=h as i64).map(|i| last + i * step).collect();
    let names = if model.dim_names.len() == model.p {
        model.dim_names.clone()
    } else {
        day.dim_names().to_vec()
    };
    let out = MultiSeries64::from_flat(forecast.values.as_flat().to_vec(), model.p)?
        .with_timestamps(stamps)?
        .with_dim_names(names)?;
    Ok((out, forecast))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Pooled over all backtests.
    pub aggregate: EvalReport64,
    /// One report per column in univariate mode; the single joint report otherwise.
    pub per_series: Vec<EvalReport64>,
}

pub fn evaluate(series: &MultiSeries64, cfg: &RunConfig, dataset_id: &str) -> Result<Evaluation> {
    let per_series = match cfg.mode {
        Mode::Multivariate => {
            vec![run_backtest(series, &cfg.methods, &cfg.backtest(dataset_id)?)
                .with_context(|| format!("backtest of {dataset_id}"))?]
        }
        Mode::Univariate => {
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(jobs) = cfg.jobs {
                pool = pool.num_threads(jobs);
            }
            let pool = pool.build()?;
            pool.install(|| {
                (0..series.dims())
                    .into_par_iter()
                    .map(|j| {
                        let name = series.dim_names()[j].clone();
                        let column = series.select_dim(j)?;
                        run_backtest(&column, &cfg.methods, &cfg.backtest(&name)?)
                            .with_context(|| format!("backtest of column '{name}'"))
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };
    let aggregate = if per_series.len() == 1 {
        per_series[0].clone()
    } else {
        EvalReport64::aggregate(dataset_id, &per_series)?
    };
    Ok(Evaluation { aggregate, per_series })
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes `report.json`, `report.txt`, `errors.csv` and, for several series,
/// `series/<name>.json`. Returns the paths written.
pub fn write_evaluation(eval: &Evaluation, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, contents: String| -> Result<()> {
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    put(dir.join("report.json"), eval.aggregate.to_json()?)?;
    put(dir.join("report.txt"), eval.aggregate.to_table())?;
    put(dir.join("errors.csv"), eval.aggregate.errors_csv())?;
    if eval.per_series.len() > 1 {
        let sub = dir.join("series");
        fs::create_dir_all(&sub).with_context(|| format!("creating {}", sub.display()))?;
        for r in &eval.per_series {
            put(sub.join(format!("{}.json", file_safe(&r.dataset_id))), r.to_json()?)?;
        }
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<EvalReport64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EvalReport64::from_json(&text).with_context(|| format!("parsing report {}", path.display()))
}

/// Pools saved reports into one summary.
pub fn compare(paths: &[PathBuf]) -> Result<EvalReport64> {
    let reports = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport64::aggregate("comparison", &reports)?)
}

pub fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into())
}

pub fn ingest(path: &Path) -> Result<MultiSeries64> {
    csvio::ingest_csv(path).with_context(|| format!("reading {}", path.display()))
}
