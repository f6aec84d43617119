use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Every bid was zero, so there is no clearing price this round.
    #[error("no market held: total bid is zero")]
    NoMarket,

    /// The Nash-equilibrium system produced a negative allocation.
    #[error("infeasible equilibrium: allocation {index} would be {value}")]
    InfeasibleNe { index: usize, value: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// One entry per offending configuration field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Failures that come from the numerics rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::InfeasibleNe { .. } | Error::Numeric(_))
    }
}
