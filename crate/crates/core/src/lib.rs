//! Numerical laboratory for metric Bauer simplices over finite metric spaces.
//!
//! Compact spaces are replaced by finite nets; state spaces become simplices of
//! probability measures with the 1-Wasserstein metric. On top of that sit
//! Lipschitz nuclei, distances between spaces and simplices, dynamics and
//! Markov chains, and parameter-indexed fields of all of these.

// Negated comparisons reject NaN; matrix code reads best with index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod distances;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod io;
pub mod lipgeometry;
pub mod markov;
pub mod metric_space;
pub mod plot;
pub mod scenario;
pub mod selfcheck;
pub mod transport;

pub use config::{Config, Limits, Tolerances, LIMITS, TOL};
pub use error::{Error, MetricReport, Result, Violation};
pub use metric_space::{FiniteMetricSpace, SubsetRef};
pub use transport::Measure;

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
