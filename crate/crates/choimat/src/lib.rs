//! Positive maps on small matrix algebras, studied through their Choi
//! matrices.
//!
//! The crate certifies block positivity of bipartite operators with a
//! see-saw search over product vectors, computes the alpha norm by the
//! exact symmetry-reduction of its inner maximization, analyses Schmidt
//! structure, constructively reduces symmetries of the membership body to
//! the transposition Choi matrix by local unitaries, implements the
//! generalized Choi map family with its closed-form positivity conditions,
//! and runs Arveson-style extremality tests for restrictions to the
//! diagonal subalgebra. A classifier for the n = 2 regular extreme case
//! recovers the canonical two-parameter form and its convex decomposition.

pub mod arveson;
pub mod certify;
pub mod choi;
pub mod choi_family;
pub mod classify2;
pub mod linalg;
pub mod schmidt;
pub mod symmetry;

use std::fmt;

/// Reason a candidate operator cannot be reduced to the transposition Choi
/// matrix by local unitaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceFailure {
    /// The partial transpose is not (numerically) a rank-one operator.
    PartialTransposeNotRankOne,
    /// The range vector of the partial transpose is not maximally entangled.
    NotMaximallyEntangled,
}

impl fmt::Display for ReduceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReduceFailure::PartialTransposeNotRankOne => {
                write!(f, "partial-transpose-not-rank-one")
            }
            ReduceFailure::NotMaximallyEntangled => write!(f, "not-maximally-entangled"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not unitary within tolerance")]
    NotUnitary,
    #[error("matrix is not a rank-one projector")]
    NotRankOneProjector,
    #[error("vector is not normalized")]
    NotNormalized,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("operator is not a self-adjoint involution")]
    NotSymmetry,
    #[error("sum of the family is singular (smallest eigenvalue {0:.3e})")]
    SingularSum(f64),
    #[error("not reducible: {0}")]
    NotReducible(ReduceFailure),
    #[error("diagonal blocks do not match any canonical rank pattern")]
    NotCanonical,
    #[error("off-diagonal block leaves the canonical span (residual {0:.3e})")]
    ResidualTooLarge(f64),
    #[error("decomposition weights leave the simplex: {0}")]
    WeightViolation(String),
}
