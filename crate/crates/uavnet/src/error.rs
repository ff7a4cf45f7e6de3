//! Crate-wide error type.
//!
//! Every fallible operation in the library reports through [`Error`]. Variants
//! carry enough context (field paths, offending ids, best-effort counts) that a
//! caller can turn them into actionable diagnostics without re-deriving state.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// Schema or semantic validation failure. `field` is a path into the
    /// offending document, e.g. `ground_links[3]` or `params.a2g_range`.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// A planning step cannot satisfy its geometric preconditions.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Grid initialisation found fewer occupied cells than requested centroids.
    #[error("grid init: k = {k} exceeds the {occupied} non-empty cells at grid_g = {grid_g}")]
    GridTooCoarse { k: usize, occupied: usize, grid_g: usize },

    #[error("clustering: all user weights are zero")]
    AllWeightsZero,

    /// Relay search exhausted its budget without reaching full connectivity.
    #[error(
        "relay placement: budget of {budget} relays exhausted, best configuration still has {components} components"
    )]
    RelayBudget { budget: usize, components: usize },

    /// Linear program has no feasible point; `row` names a constraint that
    /// still carried artificial infeasibility when phase one bottomed out.
    #[error("linear program infeasible (witness row {row})")]
    LpInfeasible { row: usize },

    #[error("linear program unbounded (entering column {col})")]
    LpUnbounded { col: usize },

    #[error("solver iteration limit {limit} reached")]
    IterationLimit { limit: usize },

    #[error("{0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable code, stable across releases. The CLI prints
    /// these on the diagnostic stream so scripts can branch on failure class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Infeasible(_) => "infeasible",
            Error::GridTooCoarse { .. } => "grid-too-coarse",
            Error::AllWeightsZero => "all-weights-zero",
            Error::RelayBudget { .. } => "relay-budget",
            Error::LpInfeasible { .. } => "lp-infeasible",
            Error::LpUnbounded { .. } => "lp-unbounded",
            Error::IterationLimit { .. } => "iteration-limit",
            Error::Internal(_) => "internal",
        }
    }
}
