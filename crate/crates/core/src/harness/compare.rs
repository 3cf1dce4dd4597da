//! Single-chain versus parallel-chain comparison at scaled planner outputs.

use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, DEFAULT_MAX_GRADIENT_EVALS};
use crate::error::{config, Result};
use crate::estimators::SymMatrix;
use crate::planner::{plan_parallel, plan_single, ComplexityPlan, PlanRequest};
use crate::potentials::{require_constants, Constants, Potential};
use crate::rng::StreamKey;

/// `total_parallel / total_single = N(m_par + 1) / (m_single + n)` of the
/// certified plans.
pub fn planner_ratio(c: Constants, epsilon: f64, delta: f64) -> Result<f64> {
    let req = PlanRequest::new(c, epsilon, delta);
    let single = plan_single(&req)?;
    let parallel = plan_parallel(&req)?;
    Ok(parallel.total_samples as f64 / single.total_samples as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Scale applied to `n` and `N`, in `(0, 1]`.
    pub gamma: f64,
    pub replications: u64,
    pub base_seed: u64,
    /// Cap applied to each mode's run separately.
    #[serde(default = "default_cap")]
    pub max_gradient_evals: u128,
}

fn default_cap() -> u128 {
    DEFAULT_MAX_GRADIENT_EVALS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    /// The γ-scaled plan that was executed.
    pub plan: ComplexityPlan,
    pub certified_total_samples: u128,
    pub coverage: f64,
    pub median_err_total: f64,
    pub median_err_var: f64,
    pub gradient_evals: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub replications: u64,
    pub planner_ratio: f64,
    pub single: ModeOutcome,
    pub parallel: ModeOutcome,
}

fn run_mode<P: Potential + ?Sized>(
    p: &P,
    certified: &ComplexityPlan,
    cfg: &CompareConfig,
    seed: u64,
    reference: Option<&SymMatrix>,
) -> Result<ModeOutcome> {
    let plan = certified.relaxed(cfg.gamma)?;
    let mut exp = ExperimentConfig::from_plan(&plan, cfg.replications, seed).with_cap(cfg.max_gradient_evals);
    if let Some(r) = reference {
        exp = exp.with_reference(r.clone());
    }
    let report = run_experiment(p, &exp)?;
    let s = report.summary;
    Ok(ModeOutcome {
        certified_total_samples: certified.total_samples,
        coverage: s.coverage.expect("plan carries epsilon"),
        median_err_total: s.err_total.q50,
        median_err_var: s.err_var.q50,
        gradient_evals: s.gradient_evals,
        plan,
    })
}

/// Runs both modes at γ-scaled plans for the same `(ε, δ)` and reports
/// coverage, median errors and gradient evaluations side by side.
///
/// The runtime guard is checked for both modes before either one runs.
pub fn compare_modes<P: Potential + ?Sized>(
    p: &P,
    cfg: &CompareConfig,
    reference: Option<&SymMatrix>,
) -> Result<ComparisonReport> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(config(format!("budget scale must lie in (0, 1], got {}", cfg.gamma)));
    }
    let c = require_constants(p)?;
    let req = PlanRequest::new(c, cfg.epsilon, cfg.delta);
    let single = plan_single(&req)?;
    let parallel = plan_parallel(&req)?;
    for plan in [&single, &parallel] {
        ExperimentConfig::from_plan(&plan.relaxed(cfg.gamma)?, cfg.replications, 0)
            .with_cap(cfg.max_gradient_evals)
            .check_budget()?;
    }
    let key = StreamKey::from_seed(cfg.base_seed);
    Ok(ComparisonReport {
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        gamma: cfg.gamma,
        replications: cfg.replications,
        planner_ratio: parallel.total_samples as f64 / single.total_samples as f64,
        single: run_mode(p, &single, cfg, key.child(0).raw(), reference)?,
        parallel: run_mode(p, &parallel, cfg, key.child(1).raw(), reference)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::potentials::PotentialSpec;

    #[test]
    fn ratio_matches_plan_arithmetic() {
        let c = Constants::new(1.0, 1.0, 4).unwrap();
        let req = PlanRequest::new(c, 0.125, 0.1);
        let s = plan_single(&req).unwrap();
        let q = plan_parallel(&req).unwrap();
        let expect = (q.n_or_n_chains as f64 * (q.m as f64 + 1.0)) / (s.m as f64 + s.n_or_n_chains as f64);
        assert_eq!(planner_ratio(c, 0.125, 0.1).unwrap(), expect);
    }

    #[test]
    fn guard_applies_before_running() {
        let p = PotentialSpec::gaussian_iso(1.0, 1).unwrap();
        let cfg = CompareConfig {
            epsilon: 1.0,
            delta: 0.1,
            gamma: 1.0,
            replications: 1,
            base_seed: 0,
            max_gradient_evals: 1_000_000,
        };
        assert!(matches!(compare_modes(&p, &cfg, None), Err(Error::Refused { .. })));
        let bad = CompareConfig { gamma: 0.0, ..cfg };
        assert!(matches!(compare_modes(&p, &bad, None), Err(Error::Config(_))));
    }

    #[test]
    fn tiny_comparison_reports_both_modes() {
        let p = PotentialSpec::gaussian_iso(1.0, 1).unwrap();
        let cfg = CompareConfig {
            epsilon: 1.0,
            delta: 0.2,
            gamma: 2e-4,
            replications: 4,
            base_seed: 11,
            max_gradient_evals: 1_000_000_000,
        };
        let rep = compare_modes(&p, &cfg, None).unwrap();
        assert!(rep.planner_ratio > 1.0);
        assert!(!rep.single.plan.certified && !rep.parallel.plan.certified);
        assert_eq!(rep.single.gradient_evals, rep.single.plan.total_samples * 4);
        assert!((0.0..=1.0).contains(&rep.parallel.coverage));
    }
}
