//! Additive Holt-Winters (triple exponential smoothing) with a grid search
//! over the smoothing parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{DayMatrix, MultiSeries};

/// Candidate smoothing parameters; every combination is tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for HwGrid {
    fn default() -> Self {
        let g = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        Self {
            alphas: g.clone(),
            betas: g.clone(),
            gammas: g,
        }
    }
}

impl HwGrid {
    /// Same candidate list for all three parameters.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "Holt-Winters grid values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            alphas: values.clone(),
            betas: values.clone(),
            gammas: values,
        })
    }
}

/// Univariate additive Holt-Winters state after smoothing `observed` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HoltWinters<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub season_length: usize,
    pub level: T,
    pub trend: T,
    pub seasonals: Vec<T>,
    pub observed: usize,
    /// In-sample one-step-ahead SSE of the fit.
    pub sse: T,
}

impl<T: Scalar> HoltWinters<T> {
    fn initial(series: &[T], s: usize, alpha: T, beta: T, gamma: T) -> Self {
        let n = T::from_count(s);
        let m1 = series[..s].iter().copied().sum::<T>() / n;
        let m2 = series[s..2 * s].iter().copied().sum::<T>() / n;
        Self {
            alpha,
            beta,
            gamma,
            season_length: s,
            level: m1,
            trend: (m2 - m1) / n,
            seasonals: series[..s].iter().map(|&x| x - m1).collect(),
            observed: 0,
            sse: T::zero(),
        }
    }

    fn step(&mut self, y: T) -> T {
        let idx = self.observed % self.season_length;
        let season = self.seasonals[idx];
        let predicted = self.level + self.trend + season;
        let level = self.alpha * (y - season) + (T::one() - self.alpha) * (self.level + self.trend);
        self.trend = self.beta * (level - self.level) + (T::one() - self.beta) * self.trend;
        self.seasonals[idx] = self.gamma * (y - level) + (T::one() - self.gamma) * season;
        self.level = level;
        self.observed += 1;
        predicted
    }

    /// Continues smoothing over newly observed values.
    pub fn update(&self, values: &[T]) -> Self {
        let mut next = self.clone();
        for &y in values {
            next.step(y);
        }
        next
    }

    /// `level + m·trend + seasonal[(observed + m − 1) mod s]` for m = 1..=steps.
    pub fn forecast(&self, steps: usize) -> Vec<T> {
        (1..=steps)
            .map(|m| {
                self.level
                    + T::from_count(m) * self.trend
                    + self.seasonals[(self.observed + m - 1) % self.season_length]
            })
            .collect()
    }
}

pub fn fit_hw<T: Scalar>(series: &[T], season_length: usize, grid: &HwGrid) -> Result<HoltWinters<T>> {
    if season_length == 0 {
        return Err(Error::InvalidParameter("season length must be positive".into()));
    }
    if series.len() < 2 * season_length {
        return Err(Error::InsufficientData(format!(
            "Holt-Winters needs two seasons ({} points), got {}",
            2 * season_length,
            series.len()
        )));
    }
    let mut best: Option<HoltWinters<T>> = None;
    for &a in &grid.alphas {
        for &b in &grid.betas {
            for &g in &grid.gammas {
                let mut hw = HoltWinters::initial(series, season_length, T::lit(a), T::lit(b), T::lit(g));
                let mut sse = T::zero();
                for &y in series {
                    let e = y - hw.step(y);
                    sse = sse + e * e;
                }
                hw.sse = if sse.is_finite() { sse } else { T::infinity() };
                if best.as_ref().is_none_or(|b| hw.sse < b.sse) {
                    best = Some(hw);
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty Holt-Winters grid".into()))
}

/// Independent per-dimension Holt-Winters fits with season length `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HoltWintersModel<T> {
    pub dims: Vec<HoltWinters<T>>,
}

impl<T: Scalar> HoltWintersModel<T> {
    pub fn fit(series: &MultiSeries<T>, season_length: usize, grid: &HwGrid) -> Result<Self> {
        let dims = (0..series.dims())
            .map(|j| fit_hw(&series.column(j), season_length, grid))
            .collect::<Result<_>>()?;
        Ok(Self { dims })
    }

    pub fn update(&self, series: &MultiSeries<T>) -> Result<Self> {
        if series.dims() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: series.dims(),
            });
        }
        Ok(Self {
            dims: self
                .dims
                .iter()
                .enumerate()
                .map(|(j, hw)| hw.update(&series.column(j)))
                .collect(),
        })
    }

    pub fn forecast_day(&self, h: usize, day_index: usize) -> Result<DayMatrix<T>> {
        let columns: Vec<Vec<T>> = self.dims.iter().map(|hw| hw.forecast(h)).collect();
        DayMatrix::from_columns(&columns, day_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_series_is_reproduced() {
        let period = [3.0, 7.0, 1.0, 4.0, 9.0];
        let x: Vec<f64> = period.iter().cycle().take(5 * 6).copied().collect();
        let hw = fit_hw::<f64>(&x, 5, &HwGrid::default()).unwrap();
        let f = hw.forecast(10);
        for (m, v) in f.iter().enumerate() {
            assert!((v - period[m % 5]).abs() < 1e-6, "step {m}: {v}");
        }
        assert!(hw.sse < 1e-18);
    }

    #[test]
    fn two_period_hand_check() {
        // On [1,2,1,2] with s = 2 the initial state already fits exactly:
        // level 1.5, trend 0, seasonals [-0.5, 0.5]; every update is a fixed point.
        let hw = fit_hw::<f64>(&[1.0, 2.0, 1.0, 2.0], 2, &HwGrid::default()).unwrap();
        assert!((hw.level - 1.5).abs() < 1e-12);
        assert!(hw.trend.abs() < 1e-12);
        assert!((hw.seasonals[0] + 0.5).abs() < 1e-12 && (hw.seasonals[1] - 0.5).abs() < 1e-12);
        for (v, want) in hw.forecast(3).iter().zip([1.0, 2.0, 1.0]) {
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series() {
        let hw = fit_hw::<f64>(&[4.0; 12], 3, &HwGrid::default()).unwrap();
        assert!(hw.forecast(7).iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn linear_ramp_continues() {
        let s = 6;
        let x: Vec<f64> = (0..60).map(|t| t as f64).collect();
        let hw = fit_hw::<f64>(&x, s, &HwGrid::default()).unwrap();
        for (m, v) in hw.forecast(s).iter().enumerate() {
            let truth = (60 + m) as f64;
            assert!(((v - truth) / truth).abs() < 0.05, "step {m}: {v} vs {truth}");
        }
    }

    #[test]
    fn update_matches_fitting_in_one_pass() {
        let x: Vec<f64> = (0..40).map(|t| ((t % 4) as f64) + 0.1 * t as f64).collect();
        let hw = fit_hw::<f64>(&x[..24], 4, &HwGrid::default()).unwrap();
        let mut manual = hw.clone();
        for &y in &x[24..] {
            manual.step(y);
        }
        assert_eq!(hw.update(&x[24..]), manual);
        assert_eq!(manual.observed, 40);
    }

    #[test]
    fn errors_and_grid() {
        assert!(fit_hw::<f64>(&[1.0, 2.0, 3.0], 2, &HwGrid::default()).is_err());
        assert!(fit_hw::<f64>(&[1.0; 4], 0, &HwGrid::default()).is_err());
        assert!(HwGrid::uniform(vec![0.5, 1.5]).is_err());
        let g = HwGrid::uniform(vec![0.2]).unwrap();
        let hw = fit_hw::<f64>(&[1.0, 2.0, 3.0, 4.0], 2, &g).unwrap();
        assert_eq!((hw.alpha, hw.beta, hw.gamma), (0.2, 0.2, 0.2));
    }

    #[test]
    fn forecasts_are_finite() {
        let x: Vec<f64> = (0..50).map(|t| 1e6 * ((t * 7919) % 13) as f64 - 3e6).collect();
        let hw = fit_hw::<f64>(&x, 5, &HwGrid::default()).unwrap();
        assert!(hw.forecast(20).iter().all(|v| v.is_finite()));
    }
}
