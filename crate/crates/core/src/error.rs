//! Crate-wide error type.

use std::fmt;

use crate::expr::{EvalError, ParseError};

/// Everything that can go wrong across the library.
#[derive(Debug)]
pub enum Error {
    /// Expression source failed to parse.
    Parse(ParseError),
    /// Expression parse failure inside a named problem field.
    FieldParse { field: String, source: ParseError },
    /// Expression evaluated outside its numeric domain.
    Eval(EvalError),
    /// File system failure with the offending path.
    Io { path: String, source: std::io::Error },
    /// Problem file is not valid JSON or violates the field schema.
    ProblemFormat { path: String, message: String },
    /// Loaded problem data is internally inconsistent.
    ProblemInvalid { message: String },
    /// No built-in problem under that name.
    UnknownProblem { name: String },
    /// Requested resolution level exceeds the dense-matrix budget.
    BasisTooLarge { j: u32, max: u32 },
    /// A pivot collapsed during LU factorization.
    Singular { context: String, pivot: usize },
    /// The eigenvalue iteration did not converge.
    EigenNoConvergence { iterations: usize },
    /// Final time is not an integer number of steps (at least two).
    NonIntegerSteps { t_final: f64, dt: f64 },
    /// Requested snapshot time does not land on the time grid.
    SnapshotOffGrid { t: f64, dt: f64 },
    /// A solver iterate stopped being finite.
    NonFinite { step: usize, t: f64 },
    /// A parameter failed validation before any computation ran.
    InvalidParameter { message: String },
    /// A requested quantity needs the exact solution and the problem has none.
    MissingExact { name: String },
    /// No snapshot was recorded at the requested time.
    MissingSnapshot { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(e) => write!(f, "{e}"),
            Error::FieldParse { field, source } => write!(f, "field `{field}`: {source}"),
            Error::Eval(e) => write!(f, "{e}"),
            Error::Io { path, source } => write!(f, "{path}: {source}"),
            Error::ProblemFormat { path, message } => write!(f, "{path}: {message}"),
            Error::ProblemInvalid { message } => write!(f, "invalid problem: {message}"),
            Error::UnknownProblem { name } => write!(f, "unknown built-in problem `{name}`"),
            Error::BasisTooLarge { j, max } => {
                write!(f, "resolution level {j} exceeds the supported maximum {max}")
            }
            Error::Singular { context, pivot } => {
                write!(f, "singular matrix in {context} (pivot {pivot})")
            }
            Error::EigenNoConvergence { iterations } => {
                write!(f, "eigenvalue iteration failed to converge after {iterations} sweeps")
            }
            Error::NonIntegerSteps { t_final, dt } => write!(
                f,
                "final time {t_final} is not an integer multiple (>= 2) of the step {dt}"
            ),
            Error::SnapshotOffGrid { t, dt } => {
                write!(f, "snapshot time {t} does not lie on the grid of step {dt}")
            }
            Error::NonFinite { step, t } => {
                write!(f, "solution became non-finite at step {step} (t = {t})")
            }
            Error::InvalidParameter { message } => write!(f, "{message}"),
            Error::MissingExact { name } => {
                write!(f, "problem `{name}` has no exact solution to compare against")
            }
            Error::MissingSnapshot { t } => write!(f, "no snapshot recorded at t = {t}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Eval(e)
    }
}
