use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use formation_core::presets::{self, UnknownPreset};
use formation_core::sim::StepError;
use formation_core::{ReferenceMode, RunAbort, Scenario, ScenarioError, Simulation, Trace};

use crate::plots::{self, PlotError};
use crate::scenario_file::{self, ScenarioFileError};
use crate::summary::Summary;
use crate::trace_csv;

pub const TRACE_CSV: &str = "trace.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Observers feed the controllers.
    #[default]
    Full,
    /// Controllers track the true leader directly.
    IdealReference,
    /// Check the scenario and stop.
    ValidateOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSource {
    File(PathBuf),
    Preset(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub out: PathBuf,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub mode: Mode,
    pub plots: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    ScenarioFile(#[from] ScenarioFileError),
    #[error(transparent)]
    Preset(#[from] UnknownPreset),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ScenarioError),
    #[error("{0}")]
    Aborted(StepError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Plot(#[from] PlotError),
}

impl SimulateError {
    pub fn exit_code(&self) -> u8 {
        match self {
            SimulateError::ScenarioFile(ScenarioFileError::Parse { .. })
            | SimulateError::Preset(_)
            | SimulateError::Invalid(_) => 2,
            SimulateError::Aborted(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    /// Absent in validate-only mode.
    pub summary: Option<Summary>,
}

/// Loads the scenario and applies command-line overrides.
pub fn resolve(config: &RunConfig) -> Result<Scenario, SimulateError> {
    let mut sc = match &config.source {
        ScenarioSource::File(path) => scenario_file::load(path)?,
        ScenarioSource::Preset(case) => presets::preset(*case)?,
    };
    if let Some(dt) = config.dt {
        sc.dt = dt;
    }
    if let Some(t) = config.t_final {
        sc.t_final = t;
    }
    match config.mode {
        Mode::Full => sc.reference = ReferenceMode::Observer,
        Mode::IdealReference => sc.reference = ReferenceMode::Ideal,
        Mode::ValidateOnly => {}
    }
    Ok(sc)
}

pub fn simulate(config: &RunConfig) -> Result<Outcome, SimulateError> {
    let scenario = resolve(config)?;
    let sim = Simulation::new(scenario.clone())?;
    if config.mode == Mode::ValidateOnly {
        return Ok(Outcome { scenario, summary: None });
    }
    let (trace, abort) = match sim.run() {
        Ok(trace) => (trace, None),
        Err(RunAbort { trace, error }) => (trace, Some(error)),
    };
    let summary = write_outputs(&config.out, &sim, &trace, abort.as_ref(), config.plots)?;
    match abort {
        Some(error) => Err(SimulateError::Aborted(error)),
        None => Ok(Outcome {
            scenario,
            summary: Some(summary),
        }),
    }
}

fn write_outputs(
    dir: &Path,
    sim: &Simulation,
    trace: &Trace,
    abort: Option<&StepError>,
    with_plots: bool,
) -> Result<Summary, SimulateError> {
    fs::create_dir_all(dir).map_err(|source| SimulateError::Output {
        path: dir.to_owned(),
        source,
    })?;
    let csv_path = dir.join(TRACE_CSV);
    let file = File::create(&csv_path).map_err(|source| SimulateError::Output {
        path: csv_path.clone(),
        source,
    })?;
    trace_csv::write(trace, BufWriter::new(file)).map_err(|source| SimulateError::Csv {
        path: csv_path.clone(),
        source,
    })?;

    let summary = Summary::new(sim, trace, abort);
    let summary_path = dir.join(SUMMARY_JSON);
    fs::write(&summary_path, summary.to_json() + "\n").map_err(|source| SimulateError::Output {
        path: summary_path,
        source,
    })?;

    if with_plots && !trace.samples.is_empty() {
        plots::write_all(dir, sim.scenario(), trace)?;
    }
    Ok(summary)
}
