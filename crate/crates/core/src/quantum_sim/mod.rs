//! Finite-dimensional state-vector simulator: registers, structured
//! projectors and unitaries, binary measurements, Jordan decompositions of
//! projector pairs, and the classical Marriott-Watrous companions.

pub mod binomial;
pub mod density;
pub mod jordan;
pub mod measure;
pub mod mwdist;
pub mod ops;
pub mod state;
pub mod trace;

pub use density::{gentle_check, DensityOp};
pub use jordan::{jordan_decompose, JordanDecomposition, JordanSubspace};
pub use measure::{alternating_outcomes, measure_binary, mixm};
pub use mwdist::{mwdist_sample, nreps, nreps_count};
pub use ops::{StructuredProjector, UnitaryOp};
pub use state::{RegisterLayout, StateVector, C};

use thiserror::Error;

/// Default cap on the total dimension of a layout.
pub const DEFAULT_DIM_CAP: usize = 1 << 18;

/// Norm tolerance kept after every operation.
pub const NORM_TOL: f64 = 1e-9;

/// Branches below this probability are refused as numerically degenerate.
pub const DEGENERATE_PROB: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("dimension {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("selected a branch of probability {0:e}")]
    Degenerate(f64),
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("decomposition failed: {what} residual {residual:e}")]
    DecompositionFailed { what: String, residual: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, QsimError>;
