//! Covariance estimation with the unadjusted Langevin algorithm.
//!
//! The crate is organised bottom-up:
//!
//! - [`potentials`]: strongly log-concave targets with gradient oracles.
//! - [`sampler`]: single-chain and parallel ULA with counter-based streams ([`rng`]).
//! - [`estimators`]: sample moments and symmetric-matrix norms.
//! - [`planner`]: step size, burn-in and sample counts for a target accuracy.
//! - [`oracles`]: closed-form Gaussian/AR(1) ground truths and bound evaluators.
//! - [`harness`]: Monte-Carlo experiments that measure the error decomposition.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod oracles;
pub mod planner;
pub mod potentials;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use estimators::{sample_moments, MomentAccumulator, MomentSummary, SymMatrix};
pub use planner::{plan_parallel, plan_single, ComplexityPlan, PlanRequest};
pub use potentials::{Constants, CustomPotential, Potential, PotentialKind, PotentialSpec};
pub use sampler::{run_parallel, run_single, ChainParams, Mode, SampleBlock};
