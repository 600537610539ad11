use std::fmt;

use thiserror::Error;

/// One violated metric axiom, identified by the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { rows: usize, row: usize, len: usize },
    NonFinite { i: usize, j: usize },
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    Negative { i: usize, j: usize, value: f64 },
    ZeroOffDiagonal { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize, dik: f64, via: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NotSquare { rows, row, len } => {
                write!(f, "row {row} has {len} entries, expected {rows}")
            }
            Violation::NonFinite { i, j } => write!(f, "non-finite entry at ({i},{j})"),
            Violation::Asymmetric { i, j, dij, dji } => {
                write!(f, "asymmetry at ({i},{j}): {dij} != {dji}")
            }
            Violation::NonzeroDiagonal { i, value } => {
                write!(f, "nonzero diagonal at {i}: {value}")
            }
            Violation::Negative { i, j, value } => {
                write!(f, "negative entry at ({i},{j}): {value}")
            }
            Violation::ZeroOffDiagonal { i, j } => {
                write!(f, "distinct points ({i},{j}) at distance 0")
            }
            Violation::Triangle { i, j, k, dik, via } => write!(
                f,
                "triangle violation ({i},{j},{k}): {dik} > {via}"
            ),
        }
    }
}

/// Every axiom violation found while validating a distance matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = self.violations.iter().take(8).map(|v| v.to_string()).collect();
        write!(f, "{}", shown.join("; "))?;
        if self.violations.len() > 8 {
            write!(f, "; ... ({} total)", self.violations.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(MetricReport),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("objects live on different spaces")]
    SpaceMismatch,

    #[error("subset is empty")]
    EmptySubset,

    #[error("{what} needs {needed} elements, above the cap of {cap}")]
    SizeCap {
        what: &'static str,
        needed: u128,
        cap: usize,
    },

    #[error("dynamics is not uniquely ergodic ({extremes} extreme invariant measures)")]
    NotUniquelyErgodic { extremes: usize },

    #[error("net projection of the map is not a bijection{}", .minimal_net_size.map(|n| format!(" (smallest admissible net size: {n})")).unwrap_or_else(|| " (no admissible net size found)".into()))]
    NonInvertibleProjection { minimal_net_size: Option<usize> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("duality gap {gap:e} exceeds tolerance {tol:e}")]
    DualityGap { gap: f64, tol: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by the caller's configuration rather than the computation.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
