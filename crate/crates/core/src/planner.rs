//! Step size, burn-in and sample-count prescriptions for covariance
//! estimation to accuracy `ε` with probability `1 − δ`, for one long chain
//! and for many parallel chains, plus the log-Sobolev constant bookkeeping
//! that the concentration argument rests on.
//!
//! Every integer output is the ceiling of its real threshold. Burn-in
//! conditions use the exact `log(1/(1 − αη))`.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::potentials::Constants;
use crate::sampler::{ChainParams, Mode};

/// Denominator constant in the step-size cap `α³ε² / (2700 β² d²)`.
pub const ETA_DENOMINATOR: f64 = 2700.0;
/// `2⁹ · 3²`, single-chain sample-count prefactor.
pub const SINGLE_PREFACTOR: f64 = 4608.0;
/// `2⁸ · 3²`, parallel chain-count prefactor.
pub const PARALLEL_PREFACTOR: f64 = 2304.0;

/// Real thresholds within this relative distance of an integer are treated
/// as that integer before taking ceilings, so values such as
/// `4608 · 2700 · 13` are not pushed up by one by rounding noise.
const INTEGER_SNAP: f64 = 1e-12;

pub(crate) fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `log(1/(1 − αη))`, evaluated without cancellation.
pub fn contraction_log(alpha: f64, eta: f64) -> f64 {
    -(-alpha * eta).ln_1p()
}

/// Largest admissible step size `α³ε² / (2700 β² d²)`.
pub fn eta_max(c: &Constants, epsilon: f64) -> f64 {
    let d = c.dim as f64;
    c.alpha.powi(3) * epsilon * epsilon / (ETA_DENOMINATOR * c.beta * c.beta * d * d)
}

fn concentration_budget(dim: usize, delta: f64) -> f64 {
    9.0 * dim as f64 + 4.0 * (4.0 / delta).ln()
}

/// Real threshold for `n`: `(2⁹·3²/η) · (9d + 4 log(4/δ)) / (α³ε²)`.
pub fn single_sample_threshold(c: &Constants, epsilon: f64, delta: f64, eta: f64) -> f64 {
    SINGLE_PREFACTOR / eta * concentration_budget(c.dim, delta) / (c.alpha.powi(3) * epsilon * epsilon)
}

/// Real threshold for `N`: `2⁸·3² · (9d + 4 log(4/δ)) / (α²ε²)`.
pub fn parallel_chain_threshold(c: &Constants, epsilon: f64, delta: f64) -> f64 {
    PARALLEL_PREFACTOR * concentration_budget(c.dim, delta) / (c.alpha * c.alpha * epsilon * epsilon)
}

/// Real threshold for the parallel burn-in: `2 log(48d/(αε)) / log(1/(1−αη)) − 1`.
pub fn parallel_burnin_threshold(c: &Constants, epsilon: f64, eta: f64) -> f64 {
    2.0 * (48.0 * c.dim as f64 / (c.alpha * epsilon)).ln() / contraction_log(c.alpha, eta) - 1.0
}

/// Smallest `m ≥ 0` with
/// `m ≥ log(κ₀/η)/L − 1` and `m ≥ log(4(E|X₀−x*|² + d/α)/(ηn))/L − 1`,
/// `L = log(1/(1 − αη))`, using `log 0 = −∞`.
pub fn theorem1_burnin(c: &Constants, eta: f64, kappa0: f64, init_msd: f64, n: u64) -> Result<u64> {
    c.check_step(eta)?;
    if !(kappa0 >= 0.0) || !(init_msd >= 0.0) {
        return Err(config("kappa0 and the initial mean-squared distance must be non-negative"));
    }
    if n == 0 {
        return Err(config("n must be at least 1"));
    }
    let l = contraction_log(c.alpha, eta);
    let lsi_clause = if kappa0 > 0.0 {
        (kappa0 / eta).ln() / l - 1.0
    } else {
        f64::NEG_INFINITY
    };
    let spread = 4.0 * (init_msd + c.dim as f64 / c.alpha) / (eta * n as f64);
    let bias_clause = spread.ln() / l - 1.0;
    let m = lsi_clause.max(bias_clause).max(0.0);
    Ok(snapped_ceil(m) as u64)
}

/// LSI constant of the law of `X_i` started from an LSI(κ₀) law:
/// `(1−αη)^{2i} κ₀ + (1 − (1−αη)^{2i}) (2/α)`.
pub fn marginal_lsi(kappa0: f64, alpha: f64, eta: f64, i: u64) -> f64 {
    let decay = (1.0 - alpha * eta).powf(2.0 * i as f64);
    decay * kappa0 + (1.0 - decay) * (2.0 / alpha)
}

/// Index from which the marginal LSI constant is at most `3/α`:
/// `log(ακ₀) / (2 log(1/(1−αη)))`, clipped at 0.
pub fn marginal_lsi_index(kappa0: f64, alpha: f64, eta: f64) -> u64 {
    if kappa0 <= 0.0 {
        return 0;
    }
    let t = (alpha * kappa0).ln() / (2.0 * contraction_log(alpha, eta));
    snapped_ceil(t.max(0.0)) as u64
}

/// LSI constant `2/(α²η)` of the joint law of the retained iterates.
pub fn joint_lsi(alpha: f64, eta: f64) -> f64 {
    2.0 / (alpha * alpha * eta)
}

/// Inputs to [`plan_single`] / [`plan_parallel`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlanRequest {
    pub constants: Constants,
    pub epsilon: f64,
    pub delta: f64,
    pub eta_override: Option<f64>,
    /// `E|X₀ − x*|²`; zero for a cold start at the minimizer.
    pub init_msd: f64,
    /// LSI constant of the law of `X₀`; zero for deterministic starts.
    pub kappa0: f64,
}

impl PlanRequest {
    pub fn new(constants: Constants, epsilon: f64, delta: f64) -> Self {
        PlanRequest {
            constants,
            epsilon,
            delta,
            eta_override: None,
            init_msd: 0.0,
            kappa0: 0.0,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta_override = Some(eta);
        self
    }

    pub fn with_initial_law(mut self, init_msd: f64, kappa0: f64) -> Self {
        self.init_msd = init_msd;
        self.kappa0 = kappa0;
        self
    }

    fn validate(&self) -> Result<(f64, Vec<String>)> {
        let c = &self.constants;
        let eps_cap = 1.0_f64.min(1.0 / c.alpha);
        if !(self.epsilon > 0.0 && self.epsilon <= eps_cap) {
            return Err(config(format!(
                "epsilon must lie in (0, min(1, 1/alpha)] = (0, {eps_cap}], got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.init_msd >= 0.0 && self.kappa0 >= 0.0) {
            return Err(config("init_msd and kappa0 must be non-negative"));
        }
        let mut warnings = Vec::new();
        if self.delta > 0.5 {
            warnings.push(format!(
                "delta = {} exceeds 1/2; the concentration argument is stated for delta in (0, 1/2]",
                self.delta
            ));
        }
        let cap = eta_max(c, self.epsilon);
        let eta = match self.eta_override {
            None => cap,
            Some(e) if !(e > 0.0) => {
                return Err(config(format!("eta override must be positive, got {e}")))
            }
            Some(e) if e > cap => {
                return Err(config(format!(
                    "eta override {e} violates eta <= alpha^3 eps^2 / (2700 beta^2 d^2) = {cap}"
                )))
            }
            Some(e) => e,
        };
        c.check_step(eta)?;
        Ok((eta, warnings))
    }
}

/// Planner output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPlan {
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub eta_max: f64,
    pub init_msd: f64,
    pub kappa0: f64,
    /// Burn-in `m`.
    pub m: u64,
    /// `n` for a single chain, `N` for parallel chains.
    #[serde(rename = "n_or_N")]
    pub n_or_n_chains: u64,
    /// `m + n`, or `N (m + 1)`.
    pub total_samples: u128,
    pub lsi_joint: f64,
    /// LSI constant of the law of the first retained iterate.
    pub lsi_marginal: f64,
    /// `2/α`, the limit of the marginal LSI constant.
    pub lsi_marginal_limit: f64,
    /// Leading-order total complexity: `β²d²(d + log δ⁻¹)/(α⁶ε⁴)`, times
    /// `log(d/(αε))` for parallel chains.
    pub order_total: f64,
    pub certified: bool,
    pub relax_factor: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn order_total(c: &Constants, epsilon: f64, delta: f64, mode: Mode) -> f64 {
    let d = c.dim as f64;
    let base = c.beta.powi(2) * d * d * (d + (1.0 / delta).ln()) / (c.alpha.powi(6) * epsilon.powi(4));
    match mode {
        Mode::SingleChain => base,
        Mode::Parallel => base * (d / (c.alpha * epsilon)).ln(),
    }
}

fn single_burnin(req: &PlanRequest, eta: f64, n: u64) -> Result<u64> {
    theorem1_burnin(&req.constants, eta, req.kappa0, req.init_msd, n)
}

fn parallel_burnin(req: &PlanRequest, eta: f64) -> u64 {
    let c = &req.constants;
    let mut t = parallel_burnin_threshold(c, req.epsilon, eta);
    if req.init_msd > 0.0 {
        // the start's distance enters the bias through (|x0 − x*|² + 2d/α)
        let two_d_over_alpha = 2.0 * c.dim as f64 / c.alpha;
        t += (1.0 + req.init_msd / two_d_over_alpha).ln() / contraction_log(c.alpha, eta);
    }
    if req.kappa0 > 0.0 {
        t = t.max((req.kappa0 / eta).ln() / contraction_log(c.alpha, eta) - 1.0);
    }
    snapped_ceil(t.max(0.0)) as u64
}

fn finish(req: &PlanRequest, mode: Mode, eta: f64, m: u64, count: u64, warnings: Vec<String>) -> Result<ComplexityPlan> {
    let c = &req.constants;
    let total_samples = match mode {
        Mode::SingleChain => m as u128 + count as u128,
        Mode::Parallel => count as u128 * (m as u128 + 1),
    };
    let plan = ComplexityPlan {
        mode,
        alpha: c.alpha,
        beta: c.beta,
        dim: c.dim,
        epsilon: req.epsilon,
        delta: req.delta,
        eta,
        eta_max: eta_max(c, req.epsilon),
        init_msd: req.init_msd,
        kappa0: req.kappa0,
        m,
        n_or_n_chains: count,
        total_samples,
        lsi_joint: joint_lsi(c.alpha, eta),
        lsi_marginal: marginal_lsi(req.kappa0, c.alpha, eta, m + 1),
        lsi_marginal_limit: 2.0 / c.alpha,
        order_total: order_total(c, req.epsilon, req.delta, mode),
        certified: true,
        relax_factor: 1.0,
        warnings,
    };
    plan.check_feasible()?;
    Ok(plan)
}

/// Rounds a real-valued threshold up to a count, refusing counts beyond `u64`.
fn count_from(real: f64, what: &str) -> Result<u64> {
    let n = snapped_ceil(real).max(1.0);
    // 2^64 is exactly representable; anything at or above it does not fit
    if !(n < 18_446_744_073_709_551_616.0) {
        return Err(config(format!("{what} {real:.3e} exceeds the representable range")));
    }
    Ok(n as u64)
}

/// Single-chain prescription `(η, m, n)`.
pub fn plan_single(req: &PlanRequest) -> Result<ComplexityPlan> {
    let (eta, warnings) = req.validate()?;
    let n_real = single_sample_threshold(&req.constants, req.epsilon, req.delta, eta);
    let n = count_from(n_real, "sample count")?;
    let m = single_burnin(req, eta, n)?;
    finish(req, Mode::SingleChain, eta, m, n, warnings)
}

/// Parallel-chain prescription `(η, m, N)`.
pub fn plan_parallel(req: &PlanRequest) -> Result<ComplexityPlan> {
    let (eta, warnings) = req.validate()?;
    let n_real = parallel_chain_threshold(&req.constants, req.epsilon, req.delta);
    let n_chains = count_from(n_real, "chain count")?;
    let m = parallel_burnin(req, eta);
    finish(req, Mode::Parallel, eta, m, n_chains, warnings)
}

pub fn plan(mode: Mode, req: &PlanRequest) -> Result<ComplexityPlan> {
    match mode {
        Mode::SingleChain => plan_single(req),
        Mode::Parallel => plan_parallel(req),
    }
}

impl ComplexityPlan {
    pub fn constants(&self) -> Constants {
        Constants {
            alpha: self.alpha,
            beta: self.beta,
            dim: self.dim,
        }
    }

    fn request(&self) -> PlanRequest {
        PlanRequest {
            constants: self.constants(),
            epsilon: self.epsilon,
            delta: self.delta,
            eta_override: Some(self.eta),
            init_msd: self.init_msd,
            kappa0: self.kappa0,
        }
    }

    /// Re-checks every inequality the plan is supposed to satisfy.
    ///
    /// Relaxed plans skip the sample-count lower bound, which they violate on purpose.
    pub fn check_feasible(&self) -> Result<()> {
        let c = self.constants();
        let violated = |what: &str| Err(config(format!("plan violates {what}")));
        if self.eta > eta_max(&c, self.epsilon) * (1.0 + INTEGER_SNAP) {
            return violated("the step-size cap");
        }
        if self.eta * self.beta >= 1.0 {
            return violated("eta < 1/beta");
        }
        let req = self.request();
        match self.mode {
            Mode::SingleChain => {
                let need = single_sample_threshold(&c, self.epsilon, self.delta, self.eta);
                if self.certified && (self.n_or_n_chains as f64) < snapped_ceil(need) {
                    return violated("the single-chain sample count");
                }
                if self.m < single_burnin(&req, self.eta, self.n_or_n_chains)? {
                    return violated("the single-chain burn-in");
                }
                if self.total_samples != self.m as u128 + self.n_or_n_chains as u128 {
                    return violated("total = m + n");
                }
            }
            Mode::Parallel => {
                let need = parallel_chain_threshold(&c, self.epsilon, self.delta);
                if self.certified && (self.n_or_n_chains as f64) < snapped_ceil(need) {
                    return violated("the chain count");
                }
                if self.m < parallel_burnin(&req, self.eta) {
                    return violated("the parallel burn-in");
                }
                if self.total_samples != self.n_or_n_chains as u128 * (self.m as u128 + 1) {
                    return violated("total = N (m + 1)");
                }
            }
        }
        Ok(())
    }

    /// Non-certified variant with `n` (or `N`) scaled by `gamma ∈ (0, 1]`.
    ///
    /// The single-chain burn-in is recomputed for the reduced `n`.
    pub fn relaxed(&self, gamma: f64) -> Result<ComplexityPlan> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(config(format!("relax factor must lie in (0, 1], got {gamma}")));
        }
        let factor = self.relax_factor * gamma;
        let count = (snapped_ceil(self.certified_count() as f64 * factor).max(1.0)) as u64;
        let mut out = self.clone();
        out.relax_factor = factor;
        out.certified = out.certified && gamma == 1.0;
        out.n_or_n_chains = count;
        match self.mode {
            Mode::SingleChain => {
                out.m = single_burnin(&self.request(), self.eta, count)?;
                out.total_samples = out.m as u128 + count as u128;
            }
            Mode::Parallel => {
                out.total_samples = count as u128 * (out.m as u128 + 1);
            }
        }
        out.lsi_marginal = marginal_lsi(self.kappa0, self.alpha, self.eta, out.m + 1);
        out.check_feasible()?;
        Ok(out)
    }

    /// `n` (or `N`) of the certified plan with the same `(ε, δ, η)`.
    pub fn certified_count(&self) -> u64 {
        let c = self.constants();
        let need = match self.mode {
            Mode::SingleChain => single_sample_threshold(&c, self.epsilon, self.delta, self.eta),
            Mode::Parallel => parallel_chain_threshold(&c, self.epsilon, self.delta),
        };
        snapped_ceil(need).max(1.0) as u64
    }

    /// Gradient evaluations one execution of the plan costs.
    pub fn gradient_evals(&self) -> u128 {
        self.total_samples
    }

    pub fn chain_params(&self, seed: u64) -> ChainParams {
        ChainParams::new(self.eta, self.m, self.n_or_n_chains, seed)
    }
}
