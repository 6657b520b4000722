//! Series data model, per-dimension normalization and day segmentation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Guard applied to the standard deviation of (near-)constant dimensions.
pub const STD_EPSILON: f64 = 1e-12;

/// Relative deviation from the nominal sampling step tolerated in timestamps.
pub const MAX_TIMESTAMP_JITTER: f64 = 0.01;

/// A multivariate series of `n` timesteps over `p` dimensions, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries<T> {
    values: Vec<T>,
    n: usize,
    p: usize,
    timestamps: Option<Vec<i64>>,
    dim_names: Vec<String>,
}

impl<T: Scalar> MultiSeries<T> {
    /// Builds a series from row-major values. Dimension names default to `dim_0..`.
    pub fn from_flat(values: Vec<T>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidSeries("series needs at least one dimension".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series needs at least one timestep".into()));
        }
        if !values.len().is_multiple_of(p) {
            return Err(Error::InvalidSeries(format!(
                "{} values do not form rows of width {p}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at row {}, dimension {}",
                pos / p,
                pos % p
            )));
        }
        let n = values.len() / p;
        Ok(Self {
            values,
            n,
            p,
            timestamps: None,
            dim_names: (0..p).map(|j| format!("dim_{j}")).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some((t, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::InvalidSeries(format!(
                "row {t} has {} values, expected {p}",
                row.len()
            )));
        }
        Self::from_flat(rows.concat(), p)
    }

    /// Univariate convenience constructor.
    pub fn univariate(values: Vec<T>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    pub fn with_dim_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: names.len(),
            });
        }
        self.dim_names = names;
        Ok(self)
    }

    /// Attaches timestamps (seconds since the epoch). They must be strictly
    /// increasing and evenly spaced up to [`MAX_TIMESTAMP_JITTER`].
    pub fn with_timestamps(mut self, timestamps: Vec<i64>) -> Result<Self> {
        if timestamps.len() != self.n {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps for {} rows",
                timestamps.len(),
                self.n
            )));
        }
        validate_timestamps(&timestamps)?;
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.p..(t + 1) * self.p]
    }

    pub fn get(&self, t: usize, j: usize) -> T {
        self.values[t * self.p + j]
    }

    pub fn timestamps(&self) -> Option<&[i64]> {
        self.timestamps.as_deref()
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    /// Sampling step in seconds, when timestamps are present and n ≥ 2.
    pub fn sampling_interval(&self) -> Option<i64> {
        self.timestamps
            .as_ref()
            .filter(|ts| ts.len() >= 2)
            .map(|ts| ts[1] - ts[0])
    }

    /// Values of dimension `j` as a contiguous vector.
    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().skip(j).step_by(self.p).copied().collect()
    }

    /// Univariate series holding only dimension `j`.
    pub fn select_dim(&self, j: usize) -> Result<Self> {
        if j >= self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: j + 1,
            });
        }
        Ok(Self {
            values: self.column(j),
            n: self.n,
            p: 1,
            timestamps: self.timestamps.clone(),
            dim_names: vec![self.dim_names[j].clone()],
        })
    }

    /// Rows `[start, end)` as a new series.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return Err(Error::InvalidParameter(format!(
                "row range [{start}, {end}) outside series of length {}",
                self.n
            )));
        }
        Ok(Self {
            values: self.values[start * self.p..end * self.p].to_vec(),
            n: end - start,
            p: self.p,
            timestamps: self.timestamps.as_ref().map(|ts| ts[start..end].to_vec()),
            dim_names: self.dim_names.clone(),
        })
    }

    /// Same geometry and metadata, new values.
    fn with_values(&self, values: Vec<T>) -> Self {
        Self {
            values,
            n: self.n,
            p: self.p,
            timestamps: self.timestamps.clone(),
            dim_names: self.dim_names.clone(),
        }
    }
}

fn validate_timestamps(ts: &[i64]) -> Result<()> {
    if let Some(w) = ts.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSeries(format!(
            "timestamps not strictly increasing at row {}",
            w + 1
        )));
    }
    if ts.len() < 2 {
        return Ok(());
    }
    let step = (ts[1] - ts[0]) as f64;
    for (i, w) in ts.windows(2).enumerate() {
        let d = (w[1] - w[0]) as f64;
        if ((d - step) / step).abs() > MAX_TIMESTAMP_JITTER {
            return Err(Error::InvalidSeries(format!(
                "irregular sampling at row {}: step {d}s vs nominal {step}s",
                i + 1
            )));
        }
    }
    Ok(())
}

/// One day of measurements: `h` timesteps by `p` dimensions, time-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DayMatrix<T> {
    values: Vec<T>,
    h: usize,
    p: usize,
    day_index: usize,
}

impl<T: Scalar> DayMatrix<T> {
    pub fn new(values: Vec<T>, h: usize, p: usize, day_index: usize) -> Result<Self> {
        if h == 0 || p == 0 {
            return Err(Error::InvalidParameter("day geometry must be non-empty".into()));
        }
        if values.len() != h * p {
            return Err(Error::InvalidSeries(format!(
                "{} values for a {h}x{p} day",
                values.len()
            )));
        }
        Ok(Self {
            values,
            h,
            p,
            day_index,
        })
    }

    /// Treats a whole series as a single day (`h = n`).
    pub fn from_series(series: &MultiSeries<T>, day_index: usize) -> Self {
        Self {
            values: series.values.clone(),
            h: series.n,
            p: series.p,
            day_index,
        }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn day_index(&self) -> usize {
        self.day_index
    }

    /// Row-major flattening: slot 0 dims 0..p, then slot 1, and so on.
    pub fn as_flat(&self) -> &[T] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, t: usize, j: usize) -> T {
        self.values[t * self.p + j]
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.p..(t + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().skip(j).step_by(self.p).copied().collect()
    }

    pub fn check_geometry(&self, h: usize, p: usize) -> Result<()> {
        if self.h != h || self.p != p {
            return Err(Error::GeometryMismatch {
                expected_h: h,
                expected_p: p,
                found_h: self.h,
                found_p: self.p,
            });
        }
        Ok(())
    }

    /// Builds a day from per-dimension columns of equal length `h`.
    pub fn from_columns(columns: &[Vec<T>], day_index: usize) -> Result<Self> {
        let p = columns.len();
        let h = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != h) {
            return Err(Error::InvalidSeries("columns of unequal length".into()));
        }
        let mut values = Vec::with_capacity(h * p);
        for t in 0..h {
            values.extend(columns.iter().map(|c| c[t]));
        }
        Self::new(values, h, p, day_index)
    }

    pub(crate) fn with_values(&self, values: Vec<T>) -> Self {
        Self {
            values,
            h: self.h,
            p: self.p,
            day_index: self.day_index,
        }
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    /// Mean 0, std 1 for every dimension.
    pub fn identity(p: usize) -> Self {
        Self {
            mean: vec![T::zero(); p],
            std: vec![T::one(); p],
        }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn scale(&self, j: usize) -> T {
        self.std[j].max(T::lit(STD_EPSILON))
    }

    fn check(&self, p: usize) -> Result<()> {
        if self.mean.len() != p || self.std.len() != p {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: p,
            });
        }
        Ok(())
    }

    fn map_flat(&self, values: &[T], p: usize, f: impl Fn(T, T, T) -> T) -> Vec<T> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let j = i % p;
                f(v, self.mean[j], self.scale(j))
            })
            .collect()
    }

    pub fn normalize(&self, series: &MultiSeries<T>) -> Result<MultiSeries<T>> {
        self.check(series.p)?;
        Ok(series.with_values(self.map_flat(&series.values, series.p, |v, m, s| (v - m) / s)))
    }

    pub fn denormalize(&self, series: &MultiSeries<T>) -> Result<MultiSeries<T>> {
        self.check(series.p)?;
        Ok(series.with_values(self.map_flat(&series.values, series.p, |v, m, s| v * s + m)))
    }

    pub fn normalize_day(&self, day: &DayMatrix<T>) -> Result<DayMatrix<T>> {
        self.check(day.p)?;
        Ok(day.with_values(self.map_flat(&day.values, day.p, |v, m, s| (v - m) / s)))
    }

    pub fn denormalize_day(&self, day: &DayMatrix<T>) -> Result<DayMatrix<T>> {
        self.check(day.p)?;
        Ok(day.with_values(self.map_flat(&day.values, day.p, |v, m, s| v * s + m)))
    }

    /// Denormalizes a flattened `h·p` vector.
    pub fn denormalize_flat(&self, values: &[T]) -> Result<Vec<T>> {
        let p = self.dims();
        if p == 0 || !values.len().is_multiple_of(p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: values.len(),
            });
        }
        Ok(self.map_flat(values, p, |v, m, s| v * s + m))
    }
}

pub fn compute_norm_stats<T: Scalar>(series: &MultiSeries<T>) -> NormStats<T> {
    let n = T::from_count(series.n);
    let mut mean = vec![T::zero(); series.p];
    for row in series.values.chunks_exact(series.p) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m = *m + v;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut var = vec![T::zero(); series.p];
    for row in series.values.chunks_exact(series.p) {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s = *s + (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    NormStats { mean, std }
}

/// `(x - mean) / max(std, 1e-12)` per dimension.
pub fn apply_norm<T: Scalar>(series: &MultiSeries<T>, stats: &NormStats<T>) -> Result<MultiSeries<T>> {
    stats.normalize(series)
}

pub fn denorm<T: Scalar>(series: &MultiSeries<T>, stats: &NormStats<T>) -> Result<MultiSeries<T>> {
    stats.denormalize(series)
}

/// Cuts the series into `⌊n/h⌋` consecutive days; a trailing partial day is dropped.
pub fn split_days<T: Scalar>(series: &MultiSeries<T>, h: usize) -> Result<Vec<DayMatrix<T>>> {
    if h == 0 {
        return Err(Error::InvalidParameter("h must be positive".into()));
    }
    if series.n < h {
        return Err(Error::NoCompleteDay { n: series.n, h });
    }
    Ok(series
        .values
        .chunks_exact(h * series.p)
        .enumerate()
        .map(|(i, chunk)| DayMatrix {
            values: chunk.to_vec(),
            h,
            p: series.p,
            day_index: i,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uni(v: &[f64]) -> MultiSeries<f64> {
        MultiSeries::univariate(v.to_vec()).unwrap()
    }

    #[test]
    fn norm_stats_examples() {
        let s = compute_norm_stats(&uni(&[1.0, 2.0, 3.0]));
        assert_abs_diff_eq!(s.mean[0], 2.0);
        assert_abs_diff_eq!(s.std[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.std[0], 0.8165, epsilon = 1e-4);

        let s = compute_norm_stats(&uni(&[5.0, 5.0, 5.0]));
        assert_eq!(s.mean, vec![5.0]);
        assert_eq!(s.std, vec![0.0]);

        let two = MultiSeries::from_rows(&[vec![0.0, 10.0], vec![2.0, 10.0]]).unwrap();
        let s = compute_norm_stats(&two);
        assert_eq!(s.mean, vec![1.0, 10.0]);
        assert_eq!(s.std, vec![1.0, 0.0]);
    }

    #[test]
    fn normalize_examples() {
        let x = uni(&[1.0, 2.0, 3.0]);
        let stats = compute_norm_stats(&x);
        let z = apply_norm(&x, &stats).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in z.values().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let back = denorm(&z, &stats).unwrap();
        for (a, b) in back.values().iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }

        let c = uni(&[5.0, 5.0]);
        let cs = compute_norm_stats(&c);
        assert_eq!(apply_norm(&c, &cs).unwrap().values(), &[0.0, 0.0]);
        assert_eq!(denorm(&uni(&[0.0, 0.0]), &cs).unwrap().values(), &[5.0, 5.0]);

        let y = uni(&[3.5, -1.0]);
        assert_eq!(denorm(&y, &NormStats::identity(1)).unwrap(), y);
    }

    #[test]
    fn normalize_dimension_mismatch() {
        let x = uni(&[1.0, 2.0]);
        let err = apply_norm(&x, &NormStats::identity(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(denorm(&x, &NormStats::identity(3)).is_err());
    }

    #[test]
    fn split_days_examples() {
        let x = uni(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let days = split_days(&x, 3).unwrap();
        assert_eq!(days.len(), 2);
        assert_eq!(days[0].as_flat(), &[0.0, 1.0, 2.0]);
        assert_eq!(days[1].as_flat(), &[3.0, 4.0, 5.0]);
        assert_eq!(days[1].day_index(), 1);

        let x = uni(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(split_days(&x, 3).unwrap().len(), 2);

        let x = uni(&[0.0, 1.0]);
        assert_eq!(split_days(&x, 3).unwrap_err(), Error::NoCompleteDay { n: 2, h: 3 });
        assert!(split_days(&x, 0).is_err());
    }

    #[test]
    fn rejects_bad_series() {
        assert!(MultiSeries::<f64>::from_flat(vec![], 1).is_err());
        assert!(MultiSeries::from_flat(vec![1.0, f64::NAN], 1).is_err());
        assert!(MultiSeries::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let x = uni(&[1.0, 2.0, 3.0]);
        assert!(x.clone().with_timestamps(vec![0, 10, 5]).is_err());
        assert!(x.clone().with_timestamps(vec![0, 10, 25]).is_err());
        assert!(x.with_timestamps(vec![0, 10, 20]).is_ok());
    }

    #[test]
    fn multivariate_days_are_time_major() {
        let x = MultiSeries::from_rows(&[vec![1.0, 10.0], vec![2.0, 20.0]]).unwrap();
        let days = split_days(&x, 2).unwrap();
        assert_eq!(days[0].as_flat(), &[1.0, 10.0, 2.0, 20.0]);
        assert_eq!(days[0].column(1), vec![10.0, 20.0]);
    }

    proptest! {
        #[test]
        fn split_then_concat_reconstructs(
            values in prop::collection::vec(-1e3f64..1e3, 1..60),
            h in 1usize..10,
        ) {
            let x = uni(&values);
            match split_days(&x, h) {
                Ok(days) => {
                    let mut joined: Vec<f64> = days.iter().flat_map(|d| d.as_flat().to_vec()).collect();
                    prop_assert_eq!(days.len(), values.len() / h);
                    joined.extend_from_slice(&values[days.len() * h..]);
                    prop_assert_eq!(joined, values);
                }
                Err(_) => prop_assert!(values.len() < h),
            }
        }

        #[test]
        fn normalized_series_is_standard(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40),
        ) {
            let x = MultiSeries::from_rows(&rows).unwrap();
            let stats = compute_norm_stats(&x);
            let z = apply_norm(&x, &stats).unwrap();
            let zs = compute_norm_stats(&z);
            let back = denorm(&z, &stats).unwrap();
            for j in 0..3 {
                if stats.std[j] > 1e-6 {
                    prop_assert!(zs.mean[j].abs() < 1e-9);
                    prop_assert!((zs.std[j] - 1.0).abs() < 1e-9);
                }
                if stats.std[j] > STD_EPSILON {
                    for t in 0..x.len() {
                        prop_assert!((back.get(t, j) - x.get(t, j)).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
