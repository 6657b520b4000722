//! Evaluation protocol: chronological train/validation/test split, per-day
//! MSE in normalized units, and mean error / mean rank summaries.

use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_mean_day, forecast_omniscient, ArModel, HoltWintersModel, HwGrid};
use crate::clustering::KMeansConfig;
use crate::error::{Error, Result};
use crate::forecaster::{select_k_with, KRange};
use crate::scalar::Scalar;
use crate::series::{compute_norm_stats, split_days, DayMatrix, MultiSeries, NormStats};

/// Fractions of whole days assigned to train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.70,
            valid: 0.15,
            test: 0.15,
        }
    }
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let all = [train, valid, test];
        if all.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "split fractions must lie in (0, 1), got {train}/{valid}/{test}"
            )));
        }
        if ((train + valid + test) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split fractions must sum to 1, got {}",
                train + valid + test
            )));
        }
        Ok(Self { train, valid, test })
    }

    /// Day counts `(⌊train·d⌋, ⌊valid·d⌋, remainder)`.
    pub fn day_counts(&self, days: usize) -> (usize, usize, usize) {
        // the small offset keeps e.g. 0.7 * 20 from flooring to 13
        let floor = |f: f64| (f * days as f64 + 1e-9).floor() as usize;
        let train = floor(self.train).min(days);
        let valid = floor(self.valid).min(days - train);
        (train, valid, days - train - valid)
    }
}

/// Splits into contiguous day-aligned blocks; a trailing partial day is dropped.
pub fn chrono_split<T: Scalar>(
    series: &MultiSeries<T>,
    spec: &SplitSpec,
    h: usize,
) -> Result<(MultiSeries<T>, MultiSeries<T>, MultiSeries<T>)> {
    if h == 0 {
        return Err(Error::InvalidParameter("h must be positive".into()));
    }
    let days = series.len() / h;
    if days < 3 {
        return Err(Error::InsufficientData(format!(
            "a chronological split needs at least 3 complete days, got {days}"
        )));
    }
    let (tr, va, te) = spec.day_counts(days);
    if tr == 0 {
        return Err(Error::EmptySplit("training"));
    }
    if va == 0 {
        return Err(Error::EmptySplit("validation"));
    }
    if te == 0 {
        return Err(Error::EmptySplit("test"));
    }
    Ok((
        series.slice_rows(0, tr * h)?,
        series.slice_rows(tr * h, (tr + va) * h)?,
        series.slice_rows((tr + va) * h, days * h)?,
    ))
}

pub(crate) fn mse_flat<T: Scalar>(forecast: &[T], actual: &[T]) -> Result<T> {
    if forecast.len() != actual.len() || forecast.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: forecast.len(),
        });
    }
    let sum = forecast
        .iter()
        .zip(actual)
        .fold(T::zero(), |acc, (&f, &a)| acc + (f - a) * (f - a));
    Ok(sum / T::from_count(forecast.len()))
}

/// Mean of squared differences over all `h·p` entries.
pub fn mse<T: Scalar>(forecast: &DayMatrix<T>, actual: &DayMatrix<T>) -> Result<T> {
    forecast.check_geometry(actual.h(), actual.p())?;
    mse_flat(forecast.as_flat(), actual.as_flat())
}

/// Ascending-error ranks starting at 1; ties share the average of the ranks
/// they cover. Non-finite errors rank last.
pub fn rank_methods<T: Scalar>(errors: &[T]) -> Vec<T> {
    let key = |e: T| if e.is_nan() { T::infinity() } else { e };
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| key(errors[a]).partial_cmp(&key(errors[b])).expect("no NaN keys"));
    let mut ranks = vec![T::zero(); errors.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && key(errors[order[j]]) == key(errors[order[i]]) {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = T::from_count(i + 1 + j) / T::lit(2.0);
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// A forecaster taking part in a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    DayAhead,
    MeanDay,
    Omniscient,
    Ar,
    Hw,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::DayAhead,
        Method::MeanDay,
        Method::Omniscient,
        Method::Ar,
        Method::Hw,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Method::DayAhead => "dayahead",
            Method::MeanDay => "meanday",
            Method::Omniscient => "omniscient",
            Method::Ar => "ar",
            Method::Hw => "hw",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::DayAhead => "Day-ahead forecasting",
            Method::MeanDay => "Mean day",
            Method::Omniscient => "Omniscient algorithm",
            Method::Ar => "AR",
            Method::Hw => "HW",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub split: SplitSpec,
    pub h: usize,
    pub k_range: KRange,
    pub seed: u64,
    /// AR lag count; defaults to `h`.
    pub ar_order: Option<usize>,
    pub hw_grid: HwGrid,
    pub kmeans: KMeansConfig,
    pub dataset_id: String,
}

impl BacktestConfig {
    pub fn new(h: usize) -> Self {
        Self {
            split: SplitSpec::default(),
            h,
            k_range: KRange::default(),
            seed: 0,
            ar_order: None,
            hw_grid: HwGrid::default(),
            kmeans: KMeansConfig::default(),
            dataset_id: String::from("series"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary<T> {
    pub method: String,
    pub mean_error: T,
    pub std_error: T,
    pub mean_rank: T,
    pub std_rank: T,
}

/// Per-forecast errors of every method plus their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "T: Scalar",
    into = "wire::Report<T>",
    try_from = "wire::Report<T>"
)]
pub struct EvalReport<T> {
    pub dataset_id: String,
    pub h: usize,
    pub p: usize,
    pub seed: u64,
    /// Cluster count chosen on validation, when the day-ahead model was trained.
    pub selected_k: Option<usize>,
    pub methods: Vec<String>,
    /// Day index (within the evaluated series) of each forecast target.
    pub forecast_days: Vec<usize>,
    /// `errors[f][m]`: MSE of method `m` on forecast `f`.
    pub errors: Vec<Vec<T>>,
    pub summary: Vec<MethodSummary<T>>,
}

fn mean_std<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = xs.clone().count();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let n = T::from_count(n);
    let mean = xs.clone().fold(T::zero(), |a, b| a + b) / n;
    if mean.is_infinite() {
        return (mean, T::infinity());
    }
    let var = xs.fold(T::zero(), |a, b| a + (b - mean) * (b - mean)) / n;
    (mean, var.sqrt())
}

impl<T: Scalar> EvalReport<T> {
    /// Builds a report and its summary from a raw error matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn from_errors(
        dataset_id: impl Into<String>,
        h: usize,
        p: usize,
        seed: u64,
        selected_k: Option<usize>,
        methods: Vec<String>,
        forecast_days: Vec<usize>,
        errors: Vec<Vec<T>>,
    ) -> Result<Self> {
        if let Some(row) = errors.iter().find(|r| r.len() != methods.len()) {
            return Err(Error::DimensionMismatch {
                expected: methods.len(),
                found: row.len(),
            });
        }
        if forecast_days.len() != errors.len() {
            return Err(Error::DimensionMismatch {
                expected: errors.len(),
                found: forecast_days.len(),
            });
        }
        let summary = summarize(&methods, &errors);
        Ok(Self {
            dataset_id: dataset_id.into(),
            h,
            p,
            seed,
            selected_k,
            methods,
            forecast_days,
            errors,
            summary,
        })
    }

    /// Per-forecast ranks, same shape as `errors`.
    pub fn ranks(&self) -> Vec<Vec<T>> {
        self.errors.iter().map(|row| rank_methods(row)).collect()
    }

    /// Recomputes the summary from the stored error matrix.
    pub fn regenerate(&self) -> Self {
        let mut out = self.clone();
        out.summary = summarize(&self.methods, &self.errors);
        out
    }

    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary<T>> {
        self.summary.iter().find(|s| s.method == method.key())
    }

    /// Pools the forecasts of several reports over the same methods into one table.
    pub fn aggregate(dataset_id: impl Into<String>, reports: &[EvalReport<T>]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InsufficientData("no reports to aggregate".into()))?;
        if reports.iter().any(|r| r.methods != first.methods) {
            return Err(Error::InvalidParameter("reports compare different methods".into()));
        }
        let errors: Vec<Vec<T>> = reports.iter().flat_map(|r| r.errors.iter().cloned()).collect();
        let days: Vec<usize> = reports.iter().flat_map(|r| r.forecast_days.iter().copied()).collect();
        let same_k = reports.iter().all(|r| r.selected_k == first.selected_k);
        Self::from_errors(
            dataset_id,
            first.h,
            first.p,
            first.seed,
            if same_k { first.selected_k } else { None },
            first.methods.clone(),
            days,
            errors,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Aligned plain-text table: one row per method, mean error ± std and mean rank ± std.
    pub fn to_table(&self) -> String {
        let label = |key: &str| {
            key.parse::<Method>()
                .map(|m| m.label().to_string())
                .unwrap_or_else(|_| key.to_string())
        };
        let rows: Vec<[String; 3]> = self
            .summary
            .iter()
            .map(|s| {
                [
                    label(&s.method),
                    format!("{:.4} ± {:.4}", s.mean_error, s.std_error),
                    format!("{:.2} ± {:.2}", s.mean_rank, s.std_rank),
                ]
            })
            .collect();
        let head = ["Method", "Mean error ± std", "Mean rank ± std"];
        let width = |c: usize| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain(std::iter::once(head[c].chars().count()))
                .max()
                .unwrap_or(0)
        };
        let (w0, w1, w2) = (width(0), width(1), width(2));
        let mut out = String::new();
        let k = self.selected_k.map_or_else(|| "-".to_string(), |k| k.to_string());
        let _ = writeln!(
            out,
            "{} (h={}, p={}, k={}, seed={}, forecasts={})",
            self.dataset_id,
            self.h,
            self.p,
            k,
            self.seed,
            self.errors.len()
        );
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
        let _ = writeln!(out, "{}  {}  {}", pad(head[0], w0), pad(head[1], w1), pad(head[2], w2));
        let _ = writeln!(out, "{}", "-".repeat(w0 + w1 + w2 + 4));
        for r in &rows {
            let _ = writeln!(out, "{}  {}  {}", pad(&r[0], w0), pad(&r[1], w1), pad(&r[2], w2));
        }
        out
    }

    /// Error matrix as CSV: `forecast,day,<method…>`.
    pub fn errors_csv(&self) -> String {
        let mut out = format!("forecast,day,{}\n", self.methods.join(","));
        for (f, (row, day)) in self.errors.iter().zip(&self.forecast_days).enumerate() {
            let cells: Vec<String> = row.iter().map(|e| format!("{:e}", e.as_f64())).collect();
            let _ = writeln!(out, "{f},{day},{}", cells.join(","));
        }
        out
    }
}

fn summarize<T: Scalar>(methods: &[String], errors: &[Vec<T>]) -> Vec<MethodSummary<T>> {
    let ranks: Vec<Vec<T>> = errors.iter().map(|row| rank_methods(row)).collect();
    methods
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let (mean_error, std_error) = mean_std(errors.iter().map(|r| r[m]));
            let (mean_rank, std_rank) = mean_std(ranks.iter().map(|r| r[m]));
            MethodSummary {
                method: name.clone(),
                mean_error,
                std_error,
                mean_rank,
                std_rank,
            }
        })
        .collect()
}

mod wire {
    //! JSON shape of [`EvalReport`]: non-finite reals are written as strings.
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum Cell<T> {
        Num(T),
        Text(String),
    }

    impl<T: Scalar> Cell<T> {
        fn of(x: T) -> Self {
            if x.is_finite() {
                Cell::Num(x)
            } else if x.is_nan() {
                Cell::Text("nan".into())
            } else if x > T::zero() {
                Cell::Text("inf".into())
            } else {
                Cell::Text("-inf".into())
            }
        }

        fn value(self) -> Result<T> {
            match self {
                Cell::Num(x) => Ok(x),
                Cell::Text(s) => match s.as_str() {
                    "inf" => Ok(T::infinity()),
                    "-inf" => Ok(T::neg_infinity()),
                    "nan" => Ok(T::nan()),
                    other => Err(Error::Serialization(format!("bad number '{other}'"))),
                },
            }
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(bound = "T: Scalar")]
    pub struct Summary<T> {
        method: String,
        mean_error: Cell<T>,
        std_error: Cell<T>,
        mean_rank: Cell<T>,
        std_rank: Cell<T>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(bound = "T: Scalar")]
    pub struct Report<T> {
        dataset_id: String,
        h: usize,
        p: usize,
        seed: u64,
        selected_k: Option<usize>,
        methods: Vec<String>,
        summary: Vec<Summary<T>>,
        forecast_days: Vec<usize>,
        errors: Vec<Vec<Cell<T>>>,
    }

    impl<T: Scalar> From<EvalReport<T>> for Report<T> {
        fn from(r: EvalReport<T>) -> Self {
            Self {
                dataset_id: r.dataset_id,
                h: r.h,
                p: r.p,
                seed: r.seed,
                selected_k: r.selected_k,
                methods: r.methods,
                summary: r
                    .summary
                    .into_iter()
                    .map(|s| Summary {
                        method: s.method,
                        mean_error: Cell::of(s.mean_error),
                        std_error: Cell::of(s.std_error),
                        mean_rank: Cell::of(s.mean_rank),
                        std_rank: Cell::of(s.std_rank),
                    })
                    .collect(),
                forecast_days: r.forecast_days,
                errors: r
                    .errors
                    .into_iter()
                    .map(|row| row.into_iter().map(Cell::of).collect())
                    .collect(),
            }
        }
    }

    impl<T: Scalar> TryFrom<Report<T>> for EvalReport<T> {
        type Error = Error;

        fn try_from(w: Report<T>) -> Result<Self> {
            let summary = w
                .summary
                .into_iter()
                .map(|s| {
                    Ok(MethodSummary {
                        method: s.method,
                        mean_error: s.mean_error.value()?,
                        std_error: s.std_error.value()?,
                        mean_rank: s.mean_rank.value()?,
                        std_rank: s.std_rank.value()?,
                    })
                })
                .collect::<Result<_>>()?;
            let errors = w
                .errors
                .into_iter()
                .map(|row| row.into_iter().map(Cell::value).collect())
                .collect::<Result<_>>()?;
            Ok(Self {
                dataset_id: w.dataset_id,
                h: w.h,
                p: w.p,
                seed: w.seed,
                selected_k: w.selected_k,
                methods: w.methods,
                forecast_days: w.forecast_days,
                errors,
                summary,
            })
        }
    }
}

/// Trains every method on the training block (the day-ahead model also uses
/// the validation block to choose k) and forecasts each test day from its
/// predecessor. The first test day is forecast from the last validation day.
///
/// Errors are MSEs in units normalized by training statistics. A method that
/// fails on a single forecast gets `+∞` for that cell.
pub fn run_backtest<T: Scalar>(
    series: &MultiSeries<T>,
    methods: &[Method],
    config: &BacktestConfig,
) -> Result<EvalReport<T>> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods to compare".into()));
    }
    let h = config.h;
    let (train, valid, test) = chrono_split(series, &config.split, h)?;
    let train_days = split_days(&train, h)?;
    let n_train = train_days.len();
    let n_valid = valid.len() / h;
    let n_test = test.len() / h;
    let total_days = n_train + n_valid + n_test;
    let all_days = split_days(&series.slice_rows(0, total_days * h)?, h)?;
    let norm = compute_norm_stats(&train);
    let normalized = norm.normalize(&series.slice_rows(0, total_days * h)?)?;

    let needs_clusters = methods
        .iter()
        .any(|m| matches!(m, Method::DayAhead | Method::Omniscient));
    let dayahead = if needs_clusters {
        let (k, model, _) = select_k_with(&train, &valid, config.k_range, h, config.seed, &config.kmeans)?;
        log::info!("{}: selected k = {k}", config.dataset_id);
        Some(model)
    } else {
        None
    };
    let mean_day = if methods.contains(&Method::MeanDay) {
        Some(fit_mean_day(&train_days)?)
    } else {
        None
    };
    let norm_train = norm.normalize(&train)?;
    let ar_order = config.ar_order.unwrap_or(h);
    let ar = if methods.contains(&Method::Ar) {
        Some(ArModel::fit(&norm_train, ar_order)?)
    } else {
        None
    };
    let mut hw = if methods.contains(&Method::Hw) {
        let fitted = HoltWintersModel::fit(&norm_train, h, &config.hw_grid)?;
        Some(fitted.update(&normalized.slice_rows(n_train * h, (n_train + n_valid) * h)?)?)
    } else {
        None
    };

    let mut errors = Vec::with_capacity(n_test);
    let mut forecast_days = Vec::with_capacity(n_test);
    for target in (n_train + n_valid)..total_days {
        let current = &all_days[target - 1];
        let actual = &all_days[target];
        let actual_norm = norm.normalize_day(actual)?;
        let row: Vec<T> = methods
            .iter()
            .map(|method| {
                let forecast: Result<DayMatrix<T>> = match method {
                    Method::DayAhead => dayahead
                        .as_ref()
                        .expect("trained")
                        .forecast_next(current)
                        .and_then(|f| norm.normalize_day(&f.values)),
                    Method::Omniscient => forecast_omniscient(dayahead.as_ref().expect("trained"), actual)
                        .and_then(|f| norm.normalize_day(&f.values)),
                    Method::MeanDay => {
                        let f = mean_day.as_ref().expect("trained").forecast(current.day_index());
                        norm.normalize_day(&f.values)
                    }
                    Method::Ar => {
                        let start = (target * h).saturating_sub(ar_order);
                        normalized
                            .slice_rows(start, target * h)
                            .and_then(|hist| ar.as_ref().expect("trained").forecast_day(&hist, h, target))
                    }
                    Method::Hw => hw.as_ref().expect("trained").forecast_day(h, target),
                };
                match forecast.and_then(|f| mse(&f, &actual_norm)) {
                    Ok(e) if !e.is_nan() => e,
                    Ok(_) => {
                        warn!("{}: {} produced NaN on day {target}", config.dataset_id, method.key());
                        T::infinity()
                    }
                    Err(e) => {
                        warn!("{}: {} failed on day {target}: {e}", config.dataset_id, method.key());
                        T::infinity()
                    }
                }
            })
            .collect();
        if let Some(state) = hw.as_mut() {
            *state = state.update(&normalized.slice_rows(target * h, (target + 1) * h)?)?;
        }
        errors.push(row);
        forecast_days.push(target);
    }

    EvalReport::from_errors(
        config.dataset_id.clone(),
        h,
        series.dims(),
        config.seed,
        dayahead.as_ref().map(|m| m.selected_k),
        methods.iter().map(|m| m.key().to_string()).collect(),
        forecast_days,
        errors,
    )
}

/// Normalized-unit MSE between a forecast and the truth, both in original units.
pub fn normalized_mse<T: Scalar>(stats: &NormStats<T>, forecast: &DayMatrix<T>, actual: &DayMatrix<T>) -> Result<T> {
    mse(&stats.normalize_day(forecast)?, &stats.normalize_day(actual)?)
}
