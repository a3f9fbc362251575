use std::path::Path;
use taippg_core::ct_map::CtError;
use taippg_core::face_rois::RoiError;
use taippg_core::media::MediaError;
use taippg_core::pipeline::AnalysisError;
use taippg_core::stats::StatsError;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;

/// A failed command: a stable error kind, a message and the exit code.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn input(kind: &str, message: impl Into<String>) -> Self {
        CliError { kind: kind.into(), message: message.into(), exit_code: EXIT_INPUT }
    }

    pub fn analysis(kind: &str, message: impl Into<String>) -> Self {
        CliError { kind: kind.into(), message: message.into(), exit_code: EXIT_ANALYSIS }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "kind": self.kind, "message": self.message }).to_string()
    }
}

pub fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input("MissingInput", format!("{what} not found: {}", path.display())))
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        if e.is_input_error() {
            CliError::input(e.kind(), e.to_string())
        } else {
            CliError::analysis(e.kind(), e.to_string())
        }
    }
}

impl From<MediaError> for CliError {
    fn from(e: MediaError) -> Self {
        CliError::input(e.kind(), e.to_string())
    }
}

impl From<RoiError> for CliError {
    fn from(e: RoiError) -> Self {
        CliError::input(e.kind(), e.to_string())
    }
}

impl From<CtError> for CliError {
    fn from(e: CtError) -> Self {
        CliError::input(e.kind(), e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::input(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input("IoFailure", e.to_string())
    }
}
