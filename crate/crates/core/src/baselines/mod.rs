//! Comparison forecasters: mean day, omniscient day type, AR and Holt-Winters.

mod ar;
mod hw;
mod mean_day;

pub use ar::{fit_ar, ArFit, ArModel};
pub use hw::{fit_hw, HoltWinters, HoltWintersModel, HwGrid};
pub use mean_day::{fit_mean_day, forecast_mean_day, MeanDayModel};

use crate::error::Result;
use crate::forecaster::{DayAheadModel, Forecast};
use crate::scalar::Scalar;
use crate::series::DayMatrix;

/// Forecasts with the centroid of the cluster the *true* next day belongs to,
/// bypassing the transition matrix. Lower bound for any centroid forecast of `model`.
pub fn forecast_omniscient<T: Scalar>(
    model: &DayAheadModel<T>,
    true_next_day: &DayMatrix<T>,
) -> Result<Forecast<T>> {
    let cluster = model.classify(true_next_day)?;
    Ok(Forecast {
        values: model.centroid_day(cluster, true_next_day.day_index())?,
        predicted_cluster: Some(cluster),
        source_day_index: true_next_day.day_index().saturating_sub(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::train;
    use crate::markov::TransitionMatrix;
    use crate::series::{split_days, MultiSeries};

    fn model() -> (DayAheadModel<f64>, Vec<DayMatrix<f64>>) {
        let s = MultiSeries::univariate(vec![0.0, 1.0, 9.0, 9.5, 0.2, 1.1, 9.1, 9.4]).unwrap();
        (train(&s, 2, 2, 5).unwrap(), split_days(&s, 2).unwrap())
    }

    #[test]
    fn exact_centroid_is_returned() {
        let (m, _) = model();
        for j in 0..2 {
            let c = m.centroid_day(j, 4).unwrap();
            let f = forecast_omniscient(&m, &c).unwrap();
            assert_eq!(f.predicted_cluster, Some(j));
            assert_eq!(f.values, c);
        }
    }

    #[test]
    fn ignores_transition_matrix() {
        let (mut m, days) = model();
        let low = m.classify(&days[0]).unwrap();
        // Markov always says "high" after "low".
        m.transitions = TransitionMatrix::from_counts(if low == 0 {
            vec![vec![0, 1], vec![0, 1]]
        } else {
            vec![vec![1, 0], vec![1, 0]]
        })
        .unwrap();
        let markov = m.forecast_next(&days[0]).unwrap();
        assert_ne!(markov.predicted_cluster, Some(low));
        let truth = DayMatrix::new(vec![0.1, 0.9], 2, 1, 1).unwrap();
        let omni = forecast_omniscient(&m, &truth).unwrap();
        assert_eq!(omni.predicted_cluster, Some(low));
        assert_eq!(omni.values, m.centroid_day(low, 1).unwrap());
    }

    #[test]
    fn single_cluster_matches_mean_day() {
        let s = MultiSeries::<f64>::univariate(vec![0.0, 1.0, 9.0, 9.5, 3.0, 4.0]).unwrap();
        let m = train(&s, 1, 2, 0).unwrap();
        let mean = fit_mean_day(&split_days(&s, 2).unwrap()).unwrap();
        let f = forecast_omniscient(&m, &DayMatrix::new(vec![50.0, 50.0], 2, 1, 3).unwrap()).unwrap();
        for (a, b) in f.values.as_flat().iter().zip(mean.mean_day.as_flat()) {
            assert!((a - b).abs() < 1e-12f64);
        }
    }
}
