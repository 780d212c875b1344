use thiserror::Error;

/// Errors raised by the analytical engine, the simulator and the config layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The stationary-distribution system could not be solved. Usually means
    /// the chain is numerically reducible (e.g. every harvest rounds to zero).
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A floating-point assembly drifted outside its admissible range by more
    /// than the clamp tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Slack allowed before a probability that left [0,1] counts as a bug.
pub(crate) const PROBABILITY_SLACK: f64 = 1e-9;

/// Clamps a floating-point probability into [0,1].
pub(crate) fn clamp_probability(p: f64, what: &str) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Numerical(format!("{what} is not finite ({p})")));
    }
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::Numerical(format!("{what} = {p} outside [0,1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}
