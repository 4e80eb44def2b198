use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("argument outside its admissible set: {0}")]
    Domain(String),

    #[error("singular best response for asset {asset}: total variance is zero with non-zero excess return")]
    Singular { asset: usize },

    #[error("no convergence in {what} after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("Merton fraction {fraction} lies outside the constraint box [{lo}, {hi}]")]
    Constraint { fraction: f64, lo: f64, hi: f64 },

    #[error("consumption weight violates the admissibility condition at t = {t} (margin {margin:e})")]
    InadmissibleLambda { t: f64, margin: f64 },

    #[error("log-wealth overflow on path {path} at t = {t}")]
    BlowUp { path: usize, t: f64 },

    #[error("inconclusive verification: CI half-width {half_width:e} too wide; try about {suggested_paths} paths")]
    Inconclusive { half_width: f64, suggested_paths: usize },

    #[error("configuration does not match the requested case: {0}")]
    ConfigMismatch(String),

    /// A verification verdict or reproduction check came out negative.
    #[error("check failed: {0}")]
    Check(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation { .. } | Error::ConfigMismatch(_) => 2,
            Error::NonConvergence { .. } | Error::IllPosed(_) | Error::Singular { .. } => 3,
            Error::Inconclusive { .. } => 4,
            Error::Usage(_) => 64,
            _ => 1,
        }
    }
}
