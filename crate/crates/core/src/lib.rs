//! Day-ahead forecasting of multivariate KPI time series.
//!
//! Historical days are normalized, clustered into typical-day profiles with
//! k-means, and the day-type sequence is modelled by a first-order Markov
//! chain. Tomorrow's forecast is the (denormalized) centroid of the most
//! probable next day type.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases at the crate root fix the precision.

pub mod baselines;
pub mod clustering;
pub mod error;
pub mod eval;
pub mod forecaster;
pub mod linalg;
pub mod markov;
pub mod scalar;
pub mod series;
pub mod synth;

pub use baselines::{
    fit_ar, fit_hw, fit_mean_day, forecast_omniscient, ArFit, ArModel, HoltWinters,
    HoltWintersModel, HwGrid, MeanDayModel,
};
pub use clustering::{fit_kmeans, ClusterModel, KMeansConfig};
pub use error::{Error, Result};
pub use eval::{
    chrono_split, mse, rank_methods, run_backtest, BacktestConfig, EvalReport, Method,
    MethodSummary, SplitSpec,
};
pub use forecaster::{select_k, select_k_with, train, train_with, DayAheadModel, Forecast, KRange, KSelection};
pub use markov::{fit_transitions, TransitionMatrix};
pub use scalar::Scalar;
pub use series::{compute_norm_stats, split_days, DayMatrix, MultiSeries, NormStats};

pub type MultiSeries64 = MultiSeries<f64>;
pub type DayMatrix64 = DayMatrix<f64>;
pub type NormStats64 = NormStats<f64>;
pub type ClusterModel64 = ClusterModel<f64>;
pub type TransitionMatrix64 = TransitionMatrix<f64>;
pub type DayAheadModel64 = DayAheadModel<f64>;
pub type Forecast64 = Forecast<f64>;
pub type EvalReport64 = EvalReport<f64>;

pub type MultiSeries32 = MultiSeries<f32>;
pub type DayMatrix32 = DayMatrix<f32>;
pub type ClusterModel32 = ClusterModel<f32>;
pub type DayAheadModel32 = DayAheadModel<f32>;
