//! File formats and the command-line driver around `formation-core`.
//!
//! Scenarios are JSON, traces are CSV with one row per recorded sample, run
//! summaries are JSON and plots are static SVG.

pub mod app;
pub mod plots;
pub mod scenario_file;
pub mod summary;
pub mod trace_csv;

pub use app::{simulate, Mode, Outcome, RunConfig, ScenarioSource, SimulateError};
