use std::fmt::Display;
use std::path::{Path, PathBuf};

use hybridsense::analytics::AnalysisConfig;
use serde::Deserialize;

/// A failure reported as one JSON line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn new(code: &str, message: impl Display) -> Self {
        CliError { code: code.to_owned(), message: message.to_string(), exit: 1 }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ServeFile {
    pub listen: Option<String>,
    pub session: Option<String>,
    pub corpus: Option<PathBuf>,
    pub pose_log_hz: Option<f64>,
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub serve: ServeFile,
    pub analyze: Option<AnalysisConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::new("BadConfig", format!("{}: {e}", path.display())))
    }
}

/// Flag (or environment, which clap folds into the flag) first, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
