//! Sample moments and the symmetric-matrix algebra used to measure errors.

mod moments;
mod sym_matrix;

pub use moments::{
    centered_decomposition_terms, centered_terms_from_summary, sample_moments, CompensatedSum,
    MomentAccumulator, MomentSummary,
};
pub use sym_matrix::{SymMatrix, DENSE_EIGEN_MAX_DIM};
