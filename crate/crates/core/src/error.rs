use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Model parameters outside their domain (m bounds, probabilities).
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// An argument fell outside the range an operation accepts.
    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The analysis asked for lies outside the regimes the theory covers.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// g_m(x) = x on all of [0,1]; there is no finite fixed-point set.
    #[error("every point of [0,1] is fixed: the update map is the identity")]
    EveryPointFixed,

    #[error("solver failed: {message} (best bracket [{lo}, {hi}])")]
    Solver { message: String, lo: f64, hi: f64 },

    #[error("invalid simulation configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            value,
            range: range.into(),
        }
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::out_of_range(name, p, "[0, 1]"))
    }
}
