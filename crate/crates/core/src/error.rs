use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto exit codes: configuration problems become code 2,
/// everything numeric becomes code 3 (see [`Error::is_config`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported for this model: {0}")]
    UnsupportedModel(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid omega specification: {0}")]
    InvalidOmega(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    #[error("pole of the gamma function at {0}")]
    Pole(f64),

    #[error("integer order {0} is not supported")]
    IntegerOrder(f64),

    #[error("argument {arg} outside the series window (|x| <= {limit})")]
    OutsideWindow { arg: f64, limit: f64 },

    #[error("grid too coarse: diagonal factor {factor:.3e} at x = {x}")]
    GridTooCoarse { x: f64, factor: f64 },

    #[error("non-finite value at x = {0}")]
    NonFinite(f64),

    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("omega has no constant floor on (-inf, 0]")]
    MissingFloor,

    #[error("omega has no constant ceiling on [upsilon, inf)")]
    MissingCeiling,

    #[error("derivative samples have not been computed")]
    MissingDerivatives,

    #[error("limit constants did not converge (c = {c_used})")]
    NotConverged { c_used: f64 },

    #[error("panel has {requested} nodes, cap is {cap}")]
    PanelTooLarge { requested: usize, cap: usize },

    #[error("table error: {0}")]
    Table(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that stem from user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Table(_)
                | Error::Io(_)
                | Error::InvalidModel(_)
                | Error::InvalidOmega(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Table(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
