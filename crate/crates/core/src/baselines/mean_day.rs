use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::Forecast;
use crate::scalar::Scalar;
use crate::series::DayMatrix;

/// Slot-wise average of the training days, in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MeanDayModel<T> {
    pub mean_day: DayMatrix<T>,
    pub h: usize,
    pub p: usize,
}

pub fn fit_mean_day<T: Scalar>(days: &[DayMatrix<T>]) -> Result<MeanDayModel<T>> {
    let first = days
        .first()
        .ok_or_else(|| Error::InsufficientData("mean day needs at least one day".into()))?;
    let (h, p) = (first.h(), first.p());
    let mut sums = vec![T::zero(); h * p];
    for d in days {
        d.check_geometry(h, p)?;
        for (s, &v) in sums.iter_mut().zip(d.as_flat()) {
            *s = *s + v;
        }
    }
    let n = T::from_count(days.len());
    let mean = sums.into_iter().map(|s| s / n).collect();
    Ok(MeanDayModel {
        mean_day: DayMatrix::new(mean, h, p, 0)?,
        h,
        p,
    })
}

impl<T: Scalar> MeanDayModel<T> {
    /// The mean day, whatever the current day looks like.
    pub fn forecast(&self, current_day_index: usize) -> Forecast<T> {
        let values = DayMatrix::new(self.mean_day.as_flat().to_vec(), self.h, self.p, current_day_index + 1)
            .expect("geometry fixed at fit");
        Forecast {
            values,
            predicted_cluster: None,
            source_day_index: current_day_index,
        }
    }
}

pub fn forecast_mean_day<T: Scalar>(model: &MeanDayModel<T>, current_day_index: usize) -> Forecast<T> {
    model.forecast(current_day_index)
}
