//! The day-ahead pipeline: normalize, split, cluster, fit the day-type chain,
//! then forecast tomorrow as the centroid of the most probable next day type.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{fit_kmeans, ClusterModel, KMeansConfig};
use crate::error::{Error, Result};
use crate::eval::mse_flat;
use crate::markov::{fit_transitions, TransitionMatrix};
use crate::scalar::Scalar;
use crate::series::{compute_norm_stats, split_days, DayMatrix, MultiSeries, NormStats};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Validation MSE differences below this are treated as ties (smaller k wins).
pub const K_TIE_TOLERANCE: f64 = 1e-12;

/// Inclusive range of candidate cluster counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min < 1 || min > max {
            return Err(Error::InvalidParameter(format!("invalid k range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn single(k: usize) -> Result<Self> {
        Self::new(k, k)
    }
}

impl Default for KRange {
    fn default() -> Self {
        Self { min: 2, max: 200 }
    }
}

/// A trained forecaster. Serializes to a single versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DayAheadModel<T> {
    pub format_version: u32,
    pub h: usize,
    pub p: usize,
    pub selected_k: usize,
    pub seed: u64,
    pub norm: NormStats<T>,
    pub clusters: ClusterModel<T>,
    pub transitions: TransitionMatrix<T>,
    #[serde(default)]
    pub dim_names: Vec<String>,
    /// Sampling step of the training data in seconds, when known.
    #[serde(default)]
    pub sampling_interval: Option<i64>,
}

/// Next-day forecast in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Forecast<T> {
    pub values: DayMatrix<T>,
    /// Day type the forecast was taken from; `None` for forecasters without clusters.
    pub predicted_cluster: Option<usize>,
    /// Index of the day the forecast was made from.
    pub source_day_index: usize,
}

impl<T: Scalar> DayAheadModel<T> {
    /// Centroid `j` in original units.
    pub fn centroid_day(&self, j: usize, day_index: usize) -> Result<DayMatrix<T>> {
        let c = self
            .clusters
            .centroids
            .get(j)
            .ok_or(Error::StateOutOfRange { state: j, k: self.clusters.k })?;
        DayMatrix::new(self.norm.denormalize_flat(c)?, self.h, self.p, day_index)
    }

    /// Cluster of a day given in original units.
    pub fn classify(&self, day: &DayMatrix<T>) -> Result<usize> {
        day.check_geometry(self.h, self.p)?;
        self.clusters.assign(&self.norm.normalize_day(day)?)
    }

    /// Predicts the day after `current_day` (original units).
    pub fn forecast_next(&self, current_day: &DayMatrix<T>) -> Result<Forecast<T>> {
        let current = self.classify(current_day)?;
        let next = self.transitions.predict_next(current)?;
        Ok(Forecast {
            values: self.centroid_day(next, current_day.day_index() + 1)?,
            predicted_cluster: Some(next),
            source_day_index: current_day.day_index(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let k = self.selected_k;
        if self.clusters.k != k || self.transitions.k != k || self.clusters.centroids.len() != k {
            return Err(Error::Serialization("cluster count disagrees across components".into()));
        }
        if self.clusters.h != self.h || self.clusters.p != self.p || self.norm.dims() != self.p {
            return Err(Error::Serialization("day geometry disagrees across components".into()));
        }
        if self.transitions.probs.len() != k || self.transitions.probs.iter().any(|r| r.len() != k) {
            return Err(Error::Serialization("transition matrix is not k×k".into()));
        }
        Ok(())
    }
}

/// Trains on `train_series` with a fixed `k`.
pub fn train<T: Scalar>(train_series: &MultiSeries<T>, k: usize, h: usize, seed: u64) -> Result<DayAheadModel<T>> {
    train_with(train_series, k, h, seed, &KMeansConfig::default())
}

pub fn train_with<T: Scalar>(
    train_series: &MultiSeries<T>,
    k: usize,
    h: usize,
    seed: u64,
    kmeans: &KMeansConfig,
) -> Result<DayAheadModel<T>> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let norm = compute_norm_stats(train_series);
    let days = split_days(&norm.normalize(train_series)?, h)?;
    if days.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 2 complete days, got {}",
            days.len()
        )));
    }
    let clusters = fit_kmeans(&days, k, seed, kmeans)?;
    let sequence = clusters.encode_sequence(&days)?;
    let transitions = fit_transitions(&sequence, k)?;
    Ok(DayAheadModel {
        format_version: MODEL_FORMAT_VERSION,
        h,
        p: train_series.dims(),
        selected_k: k,
        seed,
        norm,
        clusters,
        transitions,
        dim_names: train_series.dim_names().to_vec(),
        sampling_interval: train_series.sampling_interval(),
    })
}

/// Mean normalized-unit MSE of forecasting each of `targets` from its predecessor,
/// the first one from `first_predecessor`.
pub fn sequential_mse<T: Scalar>(
    model: &DayAheadModel<T>,
    first_predecessor: &DayMatrix<T>,
    targets: &[DayMatrix<T>],
) -> Result<T> {
    if targets.is_empty() {
        return Err(Error::InsufficientData("no days to evaluate".into()));
    }
    let mut total = T::zero();
    let mut prev = first_predecessor;
    for day in targets {
        let current = model.classify(prev)?;
        let next = model.transitions.predict_next(current)?;
        let actual = model.norm.normalize_day(day)?;
        total = total + mse_flat(&model.clusters.centroids[next], actual.as_flat())?;
        prev = day;
    }
    Ok(total / T::from_count(targets.len()))
}

/// Chooses k in `k_range` minimizing validation MSE (ties → smaller k) and
/// returns it with the model refit on `train_series`.
pub fn select_k<T: Scalar>(
    train_series: &MultiSeries<T>,
    validation: &MultiSeries<T>,
    k_range: KRange,
    h: usize,
    seed: u64,
) -> Result<(usize, DayAheadModel<T>)> {
    select_k_with(train_series, validation, k_range, h, seed, &KMeansConfig::default())
        .map(|(k, model, _)| (k, model))
}

/// Chosen k, the model refit with it, and the validation MSE of every candidate.
pub type KSelection<T> = (usize, DayAheadModel<T>, Vec<(usize, T)>);

/// As [`select_k`], also returning the validation MSE of every candidate tried.
pub fn select_k_with<T: Scalar>(
    train_series: &MultiSeries<T>,
    validation: &MultiSeries<T>,
    k_range: KRange,
    h: usize,
    seed: u64,
    kmeans: &KMeansConfig,
) -> Result<KSelection<T>> {
    let train_days = split_days(train_series, h)?;
    let valid_days = split_days(validation, h)?;
    if train_series.dims() != validation.dims() {
        return Err(Error::DimensionMismatch {
            expected: train_series.dims(),
            found: validation.dims(),
        });
    }
    let feasible_max = k_range.max.min(train_days.len());
    if k_range.max > feasible_max {
        warn!(
            "k range [{}, {}] clamped to {} training days",
            k_range.min,
            k_range.max,
            train_days.len()
        );
    }
    if k_range.min > feasible_max {
        return Err(Error::EmptyKRange {
            min: k_range.min,
            max: k_range.max,
            days: train_days.len(),
        });
    }
    let predecessor = train_days.last().expect("split_days is non-empty");
    let scores: Vec<(usize, T)> = (k_range.min..=feasible_max)
        .into_par_iter()
        .map(|k| {
            let model = train_with(train_series, k, h, seed, kmeans)?;
            Ok((k, sequential_mse(&model, predecessor, &valid_days)?))
        })
        .collect::<Result<_>>()?;

    let tol = T::lit(K_TIE_TOLERANCE);
    let mut best = scores[0];
    for &(k, score) in &scores[1..] {
        if score < best.1 - tol * best.1.max(T::one()) {
            best = (k, score);
        }
    }
    let model = train_with(train_series, best.0, h, seed, kmeans)?;
    Ok((best.0, model, scores))
}
