use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a function, e.g. a negative block size.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("config error: {0}")]
    Config(String),

    /// `J` needs a finite `h(∞)`; with `h(∞) = ∞` the value function is
    /// continuous at `t = 0` and no instantaneous-liquidation limit exists.
    #[error("J undefined: h(inf) is infinite, value function is continuous at t = 0")]
    JUndefined,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("monte carlo configuration: {0}")]
    Mc(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }
}
