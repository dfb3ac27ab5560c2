use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps variants to exit codes: configuration problems
/// ([`Error::InvalidParameter`], [`Error::Config`]) exit with 2, runtime
/// numerical failures ([`Error::Numerical`], [`Error::NoSteadyState`])
/// exit with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Configuration file or option set is malformed or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Net round-trip gain: the linear cavity has no steady state.
    #[error("no steady state: net round-trip loss {delta:.3e} is not positive")]
    NoSteadyState { delta: f64 },

    /// A numerical procedure failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => 2,
            Error::NoSteadyState { .. } | Error::Numerical(_) => 3,
        }
    }
}
