use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point or interval that does not live on the grid, or data attached
    /// to the wrong part of it.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed grid or problem description.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    /// An expression references variables it is not allowed to depend on.
    #[error("{name} may not depend on {}", .vars.join(", "))]
    DisallowedVariables { name: String, vars: Vec<String> },

    /// Expression evaluated outside its domain (ln of a non-positive number, ...).
    #[error("evaluation error in `{node}`: {reason}")]
    Eval { node: String, reason: String },

    /// Inputs are well formed but violate a mathematical precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A trajectory that does not meet the boundary values of the problem.
    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
}
