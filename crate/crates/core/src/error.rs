use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be in {range}, got {value}")]
    Domain {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("operator is not a physical Kraus branch (largest singular value {0})")]
    NotPhysical(f64),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("estimation failed for state index {state_index}: zero measured counts")]
    ZeroDenominator { state_index: usize },

    #[error("estimation needs at least one count record")]
    NoRecords,
}

impl Error {
    pub(crate) fn domain(name: &'static str, range: &'static str, value: f64) -> Self {
        Error::Domain { name, range, value }
    }
}
