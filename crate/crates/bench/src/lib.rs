//! Shared fixtures for the criterion benchmarks.

use ulacov::potentials::PotentialSpec;
use ulacov::SymMatrix;

pub fn gaussian(dim: usize) -> PotentialSpec {
    PotentialSpec::gaussian_diag((0..dim).map(|j| 1.0 + j as f64 / dim as f64).collect())
        .expect("positive precisions")
}

/// Deterministic dense symmetric test matrix with a well-separated top eigenvalue.
pub fn test_matrix(dim: usize) -> SymMatrix {
    SymMatrix::from_fn(dim, |i, j| {
        let base = ((i * 31 + j * 17) % 13) as f64 / 13.0 + ((j * 31 + i * 17) % 13) as f64 / 13.0;
        if i == j { base + dim as f64 } else { base }
    })
}
