//! Command-line front end for the `dayahead` forecaster.

pub mod app;
pub mod commands;
pub mod config;
pub mod csvio;

pub use app::run;
