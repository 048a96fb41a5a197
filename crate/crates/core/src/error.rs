use std::path::PathBuf;

/// Errors produced by the simulator.
///
/// The variants fall into three families that the command-line front end maps
/// onto distinct exit codes: configuration problems, numerical failures and
/// verification failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("`{key}` is not numeric: {value:?}")]
    NotNumeric { key: String, value: String },

    #[error("{key} out of range: {reason}")]
    OutOfRange { key: String, reason: String },

    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} above tolerance {tol:e}")]
    Quadrature { estimate: f64, error: f64, tol: f64 },

    #[error("ordering violation at z = {z}: anti-normally ordered density {density} below vacuum weight")]
    OrderingViolation { z: f64, density: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("time step too large: dt = {dt:e}, stiffness bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("covariance propagation unstable at t = {t}: {reason}")]
    Instability { t: f64, reason: String },

    #[error("population difference crosses zero at t = {t} (W = {w})")]
    PopulationInverted { t: f64, w: f64 },

    #[error("co-propagating additional intensity underflows at strength {strength}")]
    RatioUnderflow { strength: f64 },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn out_of_range(key: &str, reason: impl Into<String>) -> Self {
        Error::OutOfRange {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input configuration or arguments.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::MissingKey(_)
                | Error::UnknownKey(_)
                | Error::DuplicateKey(_)
                | Error::NotNumeric { .. }
                | Error::OutOfRange { .. }
                | Error::Syntax { .. }
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
