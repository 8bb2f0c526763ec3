//! Weight functions, the ξ / η chains and their invariant measures.

mod distribution;
mod eta;
mod weight;

use thiserror::Error;

pub use distribution::{dist_variance, DiscreteDistribution, DiscreteSampler, Lattice};
pub use eta::{
    eta_kernel_row, eta_nstep_dist, eta_step, rho_minus, rho_zero, stationarity_residual,
    EtaSampler, DEFAULT_TAIL_TOL, ITERATION_CAP,
};
pub use weight::{make_weight, WeightError, WeightFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("distribution has a negative or non-finite mass")]
    NegativeMass,
    #[error("masses sum to {total}, not 1")]
    NotNormalized { total: f64 },
    #[error("distributions live on different lattices")]
    LatticeMismatch,
    #[error("tolerance {tol} must lie in (0, 1)")]
    BadTolerance { tol: f64 },
    #[error("{what}: mass did not concentrate within the iteration cap")]
    TruncationOverflow { what: &'static str },
    #[error("eta step from {start} did not terminate within the iteration cap")]
    NonTermination { start: i64 },
}
