//! Monte-Carlo experiments around the covariance error decomposition
//!
//! `‖Σ̂ − Cov(π)‖ ≤ ‖Cov(π_η) − Cov(π)‖ + ‖E[Σ̂] − Cov(π_η)‖ + ‖Σ̂ − E[Σ̂]‖`.
//!
//! `E[Σ̂]` is not observable; every experiment approximates it by the average
//! of `Σ̂` over its replications. The first two terms are therefore the same
//! for every replication of a run, and the variance term is measured against
//! that pooled average.

mod compare;
mod output;
mod stats;
mod sweep;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{compare_modes, planner_ratio, CompareConfig, ComparisonReport, ModeOutcome};
pub use output::{read_records_csv, write_records_csv, write_report, CSV_HEADER};
pub use stats::{fit_line, median, sorted_quantile, LineFit, Quantiles};
pub use sweep::{rate_scale, rate_sweep, RateRow, RateSweepConfig, RateSweepReport};

use crate::error::{config, Error, Result};
use crate::estimators::{sample_moments, MomentSummary, SymMatrix};
use crate::oracles::gaussian_ula_stationary_cov;
use crate::planner::ComplexityPlan;
use crate::potentials::Potential;
use crate::rng::StreamKey;
use crate::sampler::{run_parallel, single_chain_moments, ChainParams, Mode};

/// Default cap on the gradient evaluations one experiment may spend.
pub const DEFAULT_MAX_GRADIENT_EVALS: u128 = 1_000_000_000;

/// Relative accuracy requested from every operator-norm evaluation.
pub const NORM_TOL: f64 = 1e-12;

/// Sampler settings shared by all replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    pub mode: Mode,
    pub eta: f64,
    pub burn_in: u64,
    /// `n` for a single chain, `N` for parallel chains.
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl Design {
    pub fn new(mode: Mode, eta: f64, burn_in: u64, count: u64) -> Self {
        Design {
            mode,
            eta,
            burn_in,
            count,
            init: None,
        }
    }

    pub fn from_plan(plan: &ComplexityPlan) -> Self {
        Design::new(plan.mode, plan.eta, plan.m, plan.n_or_n_chains)
    }

    pub fn chain_params(&self, seed: u64) -> ChainParams {
        let c = ChainParams::new(self.eta, self.burn_in, self.count, seed);
        match &self.init {
            Some(x0) => c.with_init(x0.clone()),
            None => c,
        }
    }

    /// Gradient evaluations of one replication.
    pub fn gradient_evals(&self) -> u128 {
        match self.mode {
            Mode::SingleChain => self.burn_in as u128 + self.count as u128,
            Mode::Parallel => self.count as u128 * (self.burn_in as u128 + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub design: Design,
    /// Target accuracy; enables the coverage fraction in the summary.
    pub epsilon: Option<f64>,
    pub replications: u64,
    pub base_seed: u64,
    pub max_gradient_evals: u128,
    /// Record per-replication wall time. Off by default so that CSV output
    /// is a pure function of the configuration.
    pub record_wall_time: bool,
    /// `Cov(π)` for targets without a closed form.
    pub reference_covariance: Option<SymMatrix>,
}

impl ExperimentConfig {
    pub fn new(design: Design, replications: u64, base_seed: u64) -> Self {
        ExperimentConfig {
            design,
            epsilon: None,
            replications,
            base_seed,
            max_gradient_evals: DEFAULT_MAX_GRADIENT_EVALS,
            record_wall_time: false,
            reference_covariance: None,
        }
    }

    pub fn from_plan(plan: &ComplexityPlan, replications: u64, base_seed: u64) -> Self {
        let mut cfg = Self::new(Design::from_plan(plan), replications, base_seed);
        cfg.epsilon = Some(plan.epsilon);
        cfg
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_cap(mut self, max_gradient_evals: u128) -> Self {
        self.max_gradient_evals = max_gradient_evals;
        self
    }

    pub fn with_reference(mut self, cov: SymMatrix) -> Self {
        self.reference_covariance = Some(cov);
        self
    }

    pub fn with_wall_time(mut self, on: bool) -> Self {
        self.record_wall_time = on;
        self
    }

    /// Total gradient evaluations over all replications.
    pub fn gradient_evals(&self) -> u128 {
        self.design.gradient_evals() * self.replications as u128
    }

    /// Rejects the run before any sampling if it exceeds the cap.
    pub fn check_budget(&self) -> Result<()> {
        let estimate = self.gradient_evals();
        if estimate > self.max_gradient_evals {
            return Err(Error::Refused {
                estimate,
                cap: self.max_gradient_evals,
            });
        }
        Ok(())
    }
}

/// Seed of replication `r`; chains inside it branch once more by chain index.
pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    StreamKey::from_seed(base_seed).child(rep).raw()
}

/// Moments of one replication's retained iterates.
pub fn replicate_moments<P: Potential + ?Sized>(p: &P, design: &Design, seed: u64) -> Result<MomentSummary> {
    let params = design.chain_params(seed);
    match design.mode {
        Mode::SingleChain => single_chain_moments(p, &params),
        Mode::Parallel => sample_moments(&run_parallel(p, &params)?),
    }
}

/// One row of the per-replication CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub rep: u64,
    /// `‖Σ̂ − Cov(π)‖`.
    pub err_total: f64,
    /// `‖Cov(π_η) − Cov(π)‖`, Gaussian targets only.
    pub err_disc: Option<f64>,
    /// `‖pooled Σ̂ − Cov(π_η)‖`, Gaussian targets only.
    pub err_nonstat: Option<f64>,
    /// `‖Σ̂ − pooled Σ̂‖`.
    pub err_var: f64,
    pub wall_ms: Option<f64>,
}

impl ExperimentRecord {
    /// Right-hand side of the decomposition, when all three terms are known.
    pub fn decomposition_sum(&self) -> Option<f64> {
        Some(self.err_disc? + self.err_nonstat? + self.err_var)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub design: Design,
    pub replications: u64,
    pub base_seed: u64,
    pub epsilon: Option<f64>,
    /// `#{err_total ≤ ε} / R`.
    pub coverage: Option<f64>,
    pub err_total: Quantiles,
    pub err_disc: Option<Quantiles>,
    pub err_nonstat: Option<Quantiles>,
    pub err_var: Quantiles,
    /// Across-replication average of `Σ̂`, standing in for `E[Σ̂]`.
    pub pooled_covariance: SymMatrix,
    pub reference_covariance: SymMatrix,
    pub stationary_covariance: Option<SymMatrix>,
    pub gradient_evals: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ExperimentRecord>,
    pub summary: ExperimentSummary,
}

fn reference_for<P: Potential + ?Sized>(p: &P, cfg: &ExperimentConfig) -> Result<SymMatrix> {
    let cov = match &cfg.reference_covariance {
        Some(c) => c.clone(),
        None => p.true_covariance().ok_or_else(|| {
            config("this potential has no closed-form covariance; supply a reference covariance")
        })?,
    };
    if cov.dim() != p.dim() {
        return Err(config(format!(
            "reference covariance has dimension {}, potential has {}",
            cov.dim(),
            p.dim()
        )));
    }
    Ok(cov)
}

/// Average of `Σ̂` over replications, summed in replication order.
pub fn pooled_covariance(covs: &[SymMatrix]) -> Result<SymMatrix> {
    let first = covs.first().ok_or_else(|| config("no replications to pool"))?;
    let mut acc = SymMatrix::zeros(first.dim());
    for c in covs {
        acc = acc.add(c)?;
    }
    Ok(acc.scale(1.0 / covs.len() as f64))
}

fn norm_of_diff(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.sub(b)?.operator_norm(NORM_TOL)
}

/// Runs `R` independent replications and measures every decomposition term.
///
/// Replications execute on the rayon pool; records come back in replication
/// order and do not depend on the number of workers.
pub fn run_experiment<P: Potential + ?Sized>(p: &P, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.replications == 0 {
        return Err(config("replications must be at least 1"));
    }
    cfg.check_budget()?;
    // fail on a bad design before spending time on replications
    cfg.design.chain_params(0).validate(p)?;
    let reference = reference_for(p, cfg)?;
    let stationary = match gaussian_ula_stationary_cov(p, cfg.design.eta) {
        Ok(c) => Some(c),
        Err(Error::Unavailable(_)) => None,
        Err(e) => return Err(e),
    };
    log::info!(
        "running {} replications of {:?} (eta={}, m={}, count={})",
        cfg.replications,
        cfg.design.mode,
        cfg.design.eta,
        cfg.design.burn_in,
        cfg.design.count
    );

    let reps: Vec<(MomentSummary, Option<f64>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let started = Instant::now();
            let m = replicate_moments(p, &cfg.design, replication_seed(cfg.base_seed, r))?;
            let wall = cfg
                .record_wall_time
                .then(|| started.elapsed().as_secs_f64() * 1e3);
            Ok((m, wall))
        })
        .collect::<Result<_>>()?;

    let covs: Vec<SymMatrix> = reps.iter().map(|(m, _)| m.covariance.clone()).collect();
    let pooled = pooled_covariance(&covs)?;
    let err_disc = stationary.as_ref().map(|s| norm_of_diff(s, &reference)).transpose()?;
    let err_nonstat = stationary.as_ref().map(|s| norm_of_diff(&pooled, s)).transpose()?;

    let records = covs
        .iter()
        .zip(&reps)
        .enumerate()
        .map(|(r, (cov, (_, wall)))| {
            Ok(ExperimentRecord {
                rep: r as u64,
                err_total: norm_of_diff(cov, &reference)?,
                err_disc,
                err_nonstat,
                err_var: norm_of_diff(cov, &pooled)?,
                wall_ms: *wall,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(cfg, &records, pooled, reference, stationary)?;
    Ok(ExperimentReport { records, summary })
}

fn summarize(
    cfg: &ExperimentConfig,
    records: &[ExperimentRecord],
    pooled: SymMatrix,
    reference: SymMatrix,
    stationary: Option<SymMatrix>,
) -> Result<ExperimentSummary> {
    let column = |f: fn(&ExperimentRecord) -> Option<f64>| -> Result<Option<Quantiles>> {
        let v: Option<Vec<f64>> = records.iter().map(f).collect();
        v.map(|v| Quantiles::of(&v)).transpose()
    };
    let totals: Vec<f64> = records.iter().map(|r| r.err_total).collect();
    let coverage = cfg.epsilon.map(|eps| {
        totals.iter().filter(|&&e| e <= eps).count() as f64 / records.len() as f64
    });
    Ok(ExperimentSummary {
        design: cfg.design.clone(),
        replications: cfg.replications,
        base_seed: cfg.base_seed,
        epsilon: cfg.epsilon,
        coverage,
        err_total: Quantiles::of(&totals)?,
        err_disc: column(|r| r.err_disc)?,
        err_nonstat: column(|r| r.err_nonstat)?,
        err_var: column(|r| Some(r.err_var))?.expect("always present"),
        pooled_covariance: pooled,
        reference_covariance: reference,
        stationary_covariance: stationary,
        gradient_evals: cfg.gradient_evals(),
    })
}

/// Long single-chain estimate of the covariance, for use as a reference when
/// the target has no closed form. Run it with a step much smaller than the
/// experiment's so that its own discretization bias is negligible.
pub fn long_run_reference<P: Potential + ?Sized>(p: &P, eta: f64, burn_in: u64, count: u64, seed: u64) -> Result<SymMatrix> {
    Ok(single_chain_moments(p, &ChainParams::new(eta, burn_in, count, seed))?.covariance)
}
