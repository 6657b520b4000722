//! Autoregressive baseline: ordinary least squares on lagged values with an
//! intercept, forecast recursively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::scalar::Scalar;
use crate::series::{DayMatrix, MultiSeries};

/// Univariate AR(order) fit. `coeffs[i]` multiplies the value `i + 1` steps back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ArFit<T> {
    pub order: usize,
    pub coeffs: Vec<T>,
    pub intercept: T,
}

pub fn fit_ar<T: Scalar>(series: &[T], order: usize) -> Result<ArFit<T>> {
    if order == 0 {
        return Err(Error::InvalidParameter("AR order must be positive".into()));
    }
    if series.len() <= order + 1 {
        return Err(Error::InsufficientData(format!(
            "AR({order}) needs more than {} points, got {}",
            order + 1,
            series.len()
        )));
    }
    let rows = series.len() - order;
    let cols = order + 1;
    let mut design = Vec::with_capacity(rows * cols);
    for t in order..series.len() {
        design.push(T::one());
        design.extend((1..=order).map(|lag| series[t - lag]));
    }
    let target = &series[order..];
    let rcond = T::epsilon().sqrt();
    match lstsq(&design, rows, cols, target, rcond) {
        Some(beta) if beta.iter().all(|b| b.is_finite()) => Ok(ArFit {
            order,
            intercept: beta[0],
            coeffs: beta[1..].to_vec(),
        }),
        _ => {
            let mean = series.iter().copied().sum::<T>() / T::from_count(series.len());
            Ok(ArFit {
                order,
                coeffs: vec![T::zero(); order],
                intercept: mean,
            })
        }
    }
}

impl<T: Scalar> ArFit<T> {
    /// `steps`-ahead forecast from the tail of `history`, feeding predictions back.
    pub fn forecast(&self, history: &[T], steps: usize) -> Result<Vec<T>> {
        if history.len() < self.order {
            return Err(Error::InsufficientData(format!(
                "AR({}) forecast needs {} history points, got {}",
                self.order,
                self.order,
                history.len()
            )));
        }
        let mut window = history[history.len() - self.order..].to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let next = self
                .coeffs
                .iter()
                .zip(window.iter().rev())
                .fold(self.intercept, |acc, (&c, &x)| acc + c * x);
            window.remove(0);
            window.push(next);
            out.push(next);
        }
        Ok(out)
    }

    pub fn is_intercept_only(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Independent per-dimension AR fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ArModel<T> {
    pub order: usize,
    pub dims: Vec<ArFit<T>>,
}

impl<T: Scalar> ArModel<T> {
    pub fn fit(series: &MultiSeries<T>, order: usize) -> Result<Self> {
        let dims = (0..series.dims())
            .map(|j| fit_ar(&series.column(j), order))
            .collect::<Result<_>>()?;
        Ok(Self { order, dims })
    }

    /// Next `h` steps after the end of `history`, as a day.
    pub fn forecast_day(&self, history: &MultiSeries<T>, h: usize, day_index: usize) -> Result<DayMatrix<T>> {
        if history.dims() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: history.dims(),
            });
        }
        let start = history.len().saturating_sub(self.order);
        let columns = self
            .dims
            .iter()
            .enumerate()
            .map(|(j, fit)| {
                let tail: Vec<T> = (start..history.len()).map(|t| history.get(t, j)).collect();
                fit.forecast(&tail, h)
            })
            .collect::<Result<Vec<_>>>()?;
        DayMatrix::from_columns(&columns, day_index)
    }
}
