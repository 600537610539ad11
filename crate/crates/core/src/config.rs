//! Numerical tolerances and size caps shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute slack when validating metric axioms.
    pub metric: f64,
    /// Probability weights must sum to one within this.
    pub mass: f64,
    /// Coupling marginals must match within this.
    pub coupling: f64,
    /// Allowed gap between primal and dual transport values.
    pub duality: f64,
    /// Lipschitz and nucleus membership slack.
    pub lipschitz: f64,
    /// Hermitian check on matrix observables.
    pub hermitian: f64,
    /// Eigenvalue solver tolerance for operator norms.
    pub eigen: f64,
    /// Invariance check for stationary and invariant measures.
    pub invariance: f64,
    /// Row-sum tolerance for Markov kernels.
    pub stochastic: f64,
    /// Absolute tolerance of adaptive Simpson arc-length quadrature.
    pub quadrature: f64,
}

/// Defaults used by every operation that does not take an explicit [`Config`].
pub const TOL: Tolerances = Tolerances {
    metric: 1e-9,
    mass: 1e-12,
    coupling: 1e-9,
    duality: 1e-7,
    lipschitz: 1e-9,
    hermitian: 1e-12,
    eigen: 1e-10,
    invariance: 1e-9,
    stochastic: 1e-12,
    quadrature: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Exact covering numbers are searched exhaustively up to this many points.
    pub exact_cover_points: usize,
    /// Largest measure net `prob_net` will enumerate.
    pub prob_net_cap: usize,
    /// Largest function net `nucleus_net` will materialize.
    pub nucleus_cap: usize,
    /// Node budget of the exact Gromov-Hausdorff correspondence search.
    pub gh_nodes: u64,
}

pub const LIMITS: Limits = Limits {
    exact_cover_points: 20,
    prob_net_cap: 200_000,
    nucleus_cap: 1_000_000,
    gh_nodes: 20_000_000,
};

impl Default for Limits {
    fn default() -> Self {
        LIMITS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tol: Tolerances,
    pub limits: Limits,
}
