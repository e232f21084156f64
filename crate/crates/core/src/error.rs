use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or configuration value is out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A count (requested mean or sampled total) exceeds the 2^62 guard.
    #[error("count overflow: {what} = {value:e} exceeds the 2^62 guard")]
    Overflow { what: &'static str, value: f64 },

    /// `g(E φ, E μ, η)` is not strictly positive, so `ξ = ln g` is undefined.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// Argument outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("too many censored replicates at N0 = {n0}: {censored} of {replicates} exceed the step cap (limit {limit})")]
    ExcessCensoring {
        n0: u64,
        censored: u64,
        replicates: u64,
        limit: f64,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user input rather than by the run itself.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_) | Error::DegenerateModel(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
