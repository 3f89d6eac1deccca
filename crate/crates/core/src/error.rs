use thiserror::Error;

use crate::stepper::StepDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty geometry")]
    EmptyGeometry,

    #[error("point not in element {element}")]
    PointNotInElement { element: usize },

    #[error("degenerate element {element} (volume {volume:e})")]
    DegenerateElement { element: usize, volume: f64 },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("newton solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Last velocity iterate.
        last_velocity: Vec<f64>,
        diagnostics: Box<StepDiagnostics>,
    },

    #[error("step failed at t = {time}: {source}")]
    StepFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no spin: initial angular velocity is below the cutoff")]
    NoSpin,

    #[error("did not stop: spin never dropped below the cutoff")]
    DidNotStop,

    #[error("need >= 3 points for a slope")]
    TooFewPoints,

    #[error("study aborted after {completed} runs: {source}")]
    StudyAborted {
        completed: usize,
        partial: Vec<(f64, f64)>,
        #[source]
        source: Box<Error>,
    },
}
