use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("optimization at vf={vf} failed at iteration {iteration}: {source}")]
    Optimizer {
        vf: f64,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep failed at {} volume fraction(s): {}", failed.len(), format_failures(failed))]
    Sweep { failed: Vec<(f64, String)> },

    #[error("meta-model fit infeasible: {0}")]
    FitInfeasible(String),

    #[error("meta-model fit failed: {0}")]
    FitFailure(String),

    #[error("infeasible stiffness: required normalized compliance {required:.6} is below the full-density value {full:.6} (even the full design is too compliant)")]
    InfeasibleStiffness { required: f64, full: f64 },

    #[error("material `{name}`: {source}")]
    Material {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible problem: {0}")]
    InfeasibleProblem(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_failures(failed: &[(f64, String)]) -> String {
    failed
        .iter()
        .map(|(vf, msg)| format!("vf={vf}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::Unknown { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Json(_)
            | Error::Io { .. } => true,
            Error::Material { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    /// True for errors meaning the requested design cannot exist.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::InfeasibleStiffness { .. }
            | Error::InfeasibleProblem(_)
            | Error::FitInfeasible(_) => true,
            Error::Material { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
