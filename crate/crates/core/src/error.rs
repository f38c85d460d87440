use crate::instance::{EdgeId, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded (entering column {column})")]
    Unbounded { column: usize },

    #[error("star is infeasible for the star polytope: {0}")]
    InfeasibleStar(String),

    #[error("edge {0} is not part of the star")]
    UnknownEdge(EdgeId),

    #[error("state space of {states} exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("star has {edges} edges, enumeration supports at most {limit}")]
    StarTooLarge { edges: usize, limit: usize },

    #[error("attenuation table does not match: {0}")]
    TableMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
