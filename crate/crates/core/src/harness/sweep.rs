//! Concentration-rate sweep: how `‖Σ̂ − E[Σ̂]‖` shrinks with the sample size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{fit_line, median, LineFit};
use super::{pooled_covariance, Design, NORM_TOL};
use crate::error::{config, input, Error, Result};
use crate::estimators::{centered_terms_from_summary, MomentSummary, SymMatrix};
use crate::potentials::{require_constants, Potential};
use crate::rng::StreamKey;
use crate::sampler::Mode;

/// Consecutive grid ratios may differ by this relative amount (integer rounding).
const GEOMETRIC_RATIO_TOL: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepConfig {
    pub eta: f64,
    pub burn_in: u64,
    /// Geometric grid of sample sizes, at least four points.
    pub n_grid: Vec<u64>,
    pub replications: u64,
    pub base_seed: u64,
    pub max_gradient_evals: u128,
}

impl RateSweepConfig {
    fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 4 {
            return Err(input(format!(
                "the sample-size grid needs at least 4 points, got {}",
                self.n_grid.len()
            )));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(input("the sample-size grid must be positive and strictly increasing"));
        }
        let ratios: Vec<f64> = self.n_grid.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        if ratios.iter().any(|r| (r / ratios[0] - 1.0).abs() > GEOMETRIC_RATIO_TOL) {
            return Err(input("the sample-size grid must be geometric"));
        }
        if self.replications < 2 {
            return Err(config("a rate sweep needs at least 2 replications per grid point"));
        }
        Ok(())
    }

    pub fn gradient_evals(&self) -> u128 {
        let per_rep: u128 = self.n_grid.iter().map(|&n| self.burn_in as u128 + n as u128).sum();
        per_rep * self.replications as u128
    }
}

/// `(1/α) √((d + log 2)/(α² η n))`: the leading concentration scale at the
/// median (failure probability 1/2).
pub fn rate_scale(alpha: f64, dim: usize, eta: f64, n: u64) -> f64 {
    ((dim as f64 + 2.0_f64.ln()) / (alpha * alpha * eta * n as f64)).sqrt() / alpha
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    /// Median over replications of `‖Σ̂ − pooled Σ̂‖`.
    pub median_err_var: f64,
    /// Median of `‖S − pooled S‖` for the centered second moment
    /// `S = (1/n) Σ (X_i − r)(X_i − r)ᵀ`.
    pub median_second_moment_dev: f64,
    /// Median of `|X̄ − r|²`, the centered squared sample mean.
    pub median_mean_term: f64,
    pub rate_scale: f64,
    /// `median_err_var / rate_scale`.
    pub empirical_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSweepReport {
    pub config: RateSweepConfig,
    pub alpha: f64,
    pub dim: usize,
    pub rows: Vec<RateRow>,
    /// Fit of `log(median_err_var)` against `log(n)`.
    pub fit: LineFit,
}

fn grid_point<P: Potential + ?Sized>(p: &P, cfg: &RateSweepConfig, idx: usize, alpha: f64) -> Result<RateRow> {
    let n = cfg.n_grid[idx];
    let design = Design::new(Mode::SingleChain, cfg.eta, cfg.burn_in, n);
    let key = StreamKey::from_seed(cfg.base_seed).child(idx as u64);
    let summaries: Vec<MomentSummary> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| super::replicate_moments(p, &design, key.child(r).raw()))
        .collect::<Result<_>>()?;

    let covs: Vec<SymMatrix> = summaries.iter().map(|s| s.covariance.clone()).collect();
    let pooled = pooled_covariance(&covs)?;
    // r estimates (1/n) Σ E[X_i] by the across-replication average of the sample means
    let reference: Vec<f64> = (0..p.dim())
        .map(|j| summaries.iter().map(|s| s.mean[j]).sum::<f64>() / summaries.len() as f64)
        .collect();
    let terms: Vec<(SymMatrix, SymMatrix)> = summaries
        .iter()
        .map(|s| centered_terms_from_summary(s, &reference))
        .collect::<Result<_>>()?;
    let second: Vec<SymMatrix> = terms.iter().map(|(a, _)| a.clone()).collect();
    let pooled_second = pooled_covariance(&second)?;

    let err_var: Vec<f64> = covs
        .iter()
        .map(|c| c.sub(&pooled)?.operator_norm(NORM_TOL))
        .collect::<Result<_>>()?;
    let second_dev: Vec<f64> = second
        .iter()
        .map(|s| s.sub(&pooled_second)?.operator_norm(NORM_TOL))
        .collect::<Result<_>>()?;
    // the outer product v vᵀ has norm |v|² = its trace
    let mean_term: Vec<f64> = terms.iter().map(|(_, b)| b.trace()).collect();

    let median_err_var = median(&err_var)?;
    let scale = rate_scale(alpha, p.dim(), cfg.eta, n);
    Ok(RateRow {
        n,
        median_err_var,
        median_second_moment_dev: median(&second_dev)?,
        median_mean_term: median(&mean_term)?,
        rate_scale: scale,
        empirical_constant: median_err_var / scale,
    })
}

/// Measures the median sampling error over a geometric grid of `n` at fixed
/// `η` and burn-in, and fits its log-log slope (theory: −1/2).
pub fn rate_sweep<P: Potential + ?Sized>(p: &P, cfg: &RateSweepConfig) -> Result<RateSweepReport> {
    cfg.validate()?;
    let c = require_constants(p)?;
    c.check_step(cfg.eta)?;
    let estimate = cfg.gradient_evals();
    if estimate > cfg.max_gradient_evals {
        return Err(Error::Refused {
            estimate,
            cap: cfg.max_gradient_evals,
        });
    }
    let rows: Vec<RateRow> = (0..cfg.n_grid.len())
        .map(|i| grid_point(p, cfg, i, c.alpha))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.median_err_var.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(RateSweepReport {
        config: cfg.clone(),
        alpha: c.alpha,
        dim: c.dim,
        rows,
        fit,
    })
}
