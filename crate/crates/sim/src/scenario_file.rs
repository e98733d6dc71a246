use std::fs;
use std::path::{Path, PathBuf};

use formation_core::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a valid scenario: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub fn from_json(text: &str) -> serde_json::Result<Scenario> {
    serde_json::from_str(text)
}

pub fn to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

pub fn load(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioFileError::Read {
        path: path.to_owned(),
        source,
    })?;
    from_json(&text).map_err(|source| ScenarioFileError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn save(scenario: &Scenario, path: &Path) -> Result<(), ScenarioFileError> {
    fs::write(path, to_json(scenario) + "\n").map_err(|source| ScenarioFileError::Write {
        path: path.to_owned(),
        source,
    })
}
