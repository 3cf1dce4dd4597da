//! Closed-form ground truths and bound evaluators.
//!
//! Gaussian targets make the ULA chain linear, so its stationary covariance
//! and the AR(1) structure of a one-dimensional chain are available exactly.
//! The bound evaluators return the moment, Wasserstein and covariance-gap
//! bounds used to control the two bias terms.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::estimators::SymMatrix;
use crate::potentials::{require_constants, Potential};

/// Largest AR(1) block handled by the dense oracle.
pub const AR1_MAX_DIM: usize = 4096;

/// Eigenvalue clamp used for PSD square roots.
pub const PSD_CLAMP_TOL: f64 = 1e-12;

/// `Cov(π_η)` for a Gaussian target with diagonal precision `Λ`.
///
/// Solves `C = (I − ηΛ) C (I − ηΛ) + 2η I` entrywise, which gives
/// `C = (Λ − (η/2) Λ²)⁻¹`.
pub fn gaussian_ula_stationary_cov<P: Potential + ?Sized>(p: &P, eta: f64) -> Result<SymMatrix> {
    let lambda = p
        .precision_diagonal()
        .ok_or(Error::Unavailable("stationary covariance of the ULA chain"))?;
    require_constants(p)?.check_step(eta)?;
    Ok(SymMatrix::from_fn(lambda.len(), |i, j| {
        if i != j {
            return 0.0;
        }
        // 2η / (1 − (1 − ηλ)²), rearranged to avoid cancellation for small η
        1.0 / (lambda[i] * (1.0 - 0.5 * eta * lambda[i]))
    }))
}

/// Stationary Gaussian AR(1) process `Y_{i+1} = ρ Y_i + √v Z_{i+1}` over `n` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec {
    pub rho: f64,
    pub innovation_var: f64,
    pub n: usize,
}

impl Ar1Spec {
    pub fn new(rho: f64, innovation_var: f64, n: usize) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(input(format!("AR(1) coefficient must satisfy |rho| < 1, got {rho}")));
        }
        if !(innovation_var > 0.0 && innovation_var.is_finite()) {
            return Err(input("innovation variance must be positive"));
        }
        if n == 0 {
            return Err(input("AR(1) block length must be at least 1"));
        }
        Ok(Ar1Spec {
            rho,
            innovation_var,
            n,
        })
    }

    /// The one-dimensional ULA chain on `f(x) = αx²/2`: `ρ = 1 − αη`, `v = 2η`.
    pub fn from_ula(alpha: f64, eta: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && eta > 0.0 && alpha * eta < 1.0) {
            return Err(input(format!("need alpha > 0 and 0 < alpha*eta < 1, got alpha={alpha}, eta={eta}")));
        }
        Self::new(1.0 - alpha * eta, 2.0 * eta, n)
    }

    /// `v / (1 − ρ²)`.
    pub fn stationary_variance(&self) -> f64 {
        self.innovation_var / (1.0 - self.rho * self.rho)
    }

    /// `v / (1 − ρ)²`, the limit of the largest autocovariance eigenvalue.
    pub fn long_run_variance(&self) -> f64 {
        self.innovation_var / ((1.0 - self.rho) * (1.0 - self.rho))
    }
}

/// Toeplitz autocovariance `T_ij = σ² ρ^{|i−j|}`.
pub fn ar1_autocovariance(spec: &Ar1Spec) -> Result<SymMatrix> {
    if spec.n > AR1_MAX_DIM {
        return Err(input(format!(
            "AR(1) dense oracle is limited to n <= {AR1_MAX_DIM}, got {}",
            spec.n
        )));
    }
    let var = spec.stationary_variance();
    let powers: Vec<f64> = std::iter::successors(Some(var), |p| Some(p * spec.rho))
        .take(spec.n)
        .collect();
    Ok(SymMatrix::from_fn(spec.n, |i, j| powers[j.abs_diff(i)]))
}

/// Largest eigenvalue of the autocovariance matrix, by dense eigensolve.
pub fn ar1_lambda_max(spec: &Ar1Spec) -> Result<f64> {
    ar1_autocovariance(spec)?.max_eigenvalue()
}

/// `Var((1/n) Σ Y_i) = σ²/n² (n + 2 Σ_{k=1}^{n−1} (n−k) ρ^k)`.
pub fn ar1_mean_variance(spec: &Ar1Spec) -> f64 {
    let n = spec.n as f64;
    let mut acc = n;
    let mut rk = 1.0;
    for k in 1..spec.n {
        rk *= spec.rho;
        acc += 2.0 * (n - k as f64) * rk;
    }
    spec.stationary_variance() * acc / (n * n)
}

/// 2-Wasserstein distance between `N(m1, S1)` and `N(m2, S2)`:
/// `√(|m1−m2|² + tr(S1 + S2 − 2 (S1^{1/2} S2 S1^{1/2})^{1/2}))`.
pub fn gaussian_w2(m1: &[f64], s1: &SymMatrix, m2: &[f64], s2: &SymMatrix) -> Result<f64> {
    let d = m1.len();
    if m2.len() != d || s1.dim() != d || s2.dim() != d {
        return Err(input("gaussian_w2 arguments have inconsistent dimensions"));
    }
    let root1 = s1.sqrt_psd(PSD_CLAMP_TOL)?;
    // PSD check on S2 as well
    s2.sqrt_psd(PSD_CLAMP_TOL)?;
    let mut middle = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut v = 0.0;
            for k in 0..d {
                for l in 0..d {
                    v += root1.get(i, k) * s2.get(k, l) * root1.get(l, j);
                }
            }
            middle[i * d + j] = v;
        }
    }
    let cross: f64 = SymMatrix::from_row_major(d, &middle)?
        .eigenvalues()?
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let mean_sq: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b).powi(2)).sum();
    let bures = (s1.trace() + s2.trace() - 2.0 * cross).max(0.0);
    Ok((mean_sq + bures).sqrt())
}

/// Which second-moment bound to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum MomentBound {
    /// `∫|x − x*|² dπ ≤ d/α`.
    Target,
    /// `∫|x − x*|² dπ_η ≤ 2d/α`.
    Stationary,
    /// After `steps` steps from `start`:
    /// `(1−αη)^i |x − x*|² + 2(d/α)(1 − (1−αη)^i)`.
    AfterSteps { steps: u64, start: Vec<f64> },
}

fn squared_offset<P: Potential + ?Sized>(p: &P, x: &[f64]) -> Result<f64> {
    if x.len() != p.dim() {
        return Err(input(format!(
            "start point has length {}, potential has dimension {}",
            x.len(),
            p.dim()
        )));
    }
    Ok(x.iter().zip(p.minimizer()).map(|(a, b)| (a - b).powi(2)).sum())
}

fn decay(alpha: f64, eta: f64, steps: u64) -> f64 {
    (1.0 - alpha * eta).powf(steps as f64)
}

pub fn bound_moment<P: Potential + ?Sized>(p: &P, eta: f64, clause: &MomentBound) -> Result<f64> {
    let c = require_constants(p)?;
    let d_over_alpha = c.dim as f64 / c.alpha;
    match clause {
        MomentBound::Target => Ok(d_over_alpha),
        MomentBound::Stationary => {
            c.check_step(eta)?;
            Ok(2.0 * d_over_alpha)
        }
        MomentBound::AfterSteps { steps, start } => {
            c.check_step(eta)?;
            let r = decay(c.alpha, eta, *steps);
            Ok(r * squared_offset(p, start)? + 2.0 * d_over_alpha * (1.0 - r))
        }
    }
}

/// Which squared-Wasserstein bound to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum W2Bound {
    /// `W₂²(π_η, π) ≤ 4(β/α)² η (2d + d²β²η/α + d²η²/6)`.
    Discretization,
    /// `W₂²(δ_x R^i, π_η) ≤ (1−αη)^i (|x − x*|² + 2d/α)`.
    AfterSteps { steps: u64, start: Vec<f64> },
}

/// Squared 2-Wasserstein bound; callers take the square root.
pub fn bound_w2<P: Potential + ?Sized>(p: &P, eta: f64, clause: &W2Bound) -> Result<f64> {
    let c = require_constants(p)?;
    c.check_step(eta)?;
    let d = c.dim as f64;
    match clause {
        W2Bound::Discretization => {
            let ratio = c.beta / c.alpha;
            Ok(4.0 * ratio * ratio * eta
                * (2.0 * d + d * d * c.beta * c.beta * eta / c.alpha + d * d * eta * eta / 6.0))
        }
        W2Bound::AfterSteps { steps, start } => {
            Ok(decay(c.alpha, eta, *steps) * (squared_offset(p, start)? + 2.0 * d / c.alpha))
        }
    }
}

/// Which matrix-difference bound to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovDiffBound {
    /// Second moments about a common center: `(√msd1 + √msd2) W₂`.
    SecondMoment,
    /// Covariances: `2 (√msd1 + √msd2) W₂`.
    Covariance,
}

/// Bound on the operator-norm gap between two laws' second moments or covariances,
/// given their mean-squared distances to a common center and their W₂ distance.
pub fn bound_cov_diff(msd1: f64, msd2: f64, w2: f64, clause: CovDiffBound) -> Result<f64> {
    if !(msd1 >= 0.0 && msd2 >= 0.0 && w2 >= 0.0) {
        return Err(input("bound_cov_diff inputs must be non-negative"));
    }
    let base = (msd1.sqrt() + msd2.sqrt()) * w2;
    Ok(match clause {
        CovDiffBound::SecondMoment => base,
        CovDiffBound::Covariance => 2.0 * base,
    })
}

/// `C/n`: bound on `‖Cov(sample mean)‖` when the joint law satisfies a
/// Poincaré inequality with constant `C`.
pub fn poincare_mean_bound(constant: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(input("poincare_mean_bound needs n >= 1"));
    }
    if !(constant >= 0.0) {
        return Err(input("Poincare constant must be non-negative"));
    }
    Ok(constant / n as f64)
}

/// Discretization-bias bound chain for `‖Cov(π_η) − Cov(π)‖`:
/// covariance-gap bound with `msd(π_η) ≤ 2d/α`, `msd(π) ≤ d/α` and the
/// discretization W₂ bound.
pub fn discretization_bias_bound<P: Potential + ?Sized>(p: &P, eta: f64) -> Result<f64> {
    let w2 = bound_w2(p, eta, &W2Bound::Discretization)?.sqrt();
    bound_cov_diff(
        bound_moment(p, eta, &MomentBound::Stationary)?,
        bound_moment(p, eta, &MomentBound::Target)?,
        w2,
        CovDiffBound::Covariance,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialSpec;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_cov_scalar() {
        let p = PotentialSpec::gaussian_iso(1.0, 1).unwrap();
        let c = gaussian_ula_stationary_cov(&p, 0.1).unwrap();
        assert_relative_eq!(c.get(0, 0), 1.0 / 0.95, epsilon = 1e-14);
    }

    #[test]
    fn stationary_cov_matches_fixed_point_iteration() {
        let lam = vec![0.5, 2.0, 3.0];
        let p = PotentialSpec::gaussian_diag(lam.clone()).unwrap();
        let eta = 0.2;
        let c = gaussian_ula_stationary_cov(&p, eta).unwrap();
        // iterate C ← (I − ηΛ) C (I − ηΛ) + 2ηI from 0
        let mut it = vec![0.0; 3];
        for _ in 0..5000 {
            for j in 0..3 {
                let r = 1.0 - eta * lam[j];
                it[j] = r * r * it[j] + 2.0 * eta;
            }
        }
        for j in 0..3 {
            assert_relative_eq!(c.get(j, j), it[j], max_relative = 1e-12);
            assert_relative_eq!(c.get(j, j), 1.0 / (lam[j] * (1.0 - eta * lam[j] / 2.0)), max_relative = 1e-13);
        }
        assert_eq!(c.get(0, 1), 0.0);
    }

    #[test]
    fn stationary_cov_limits_and_ordering() {
        let p = PotentialSpec::gaussian_diag(vec![1.0, 4.0]).unwrap();
        let exact = p.true_covariance().unwrap();
        let tiny = gaussian_ula_stationary_cov(&p, 1e-9).unwrap();
        assert!(tiny.sub(&exact).unwrap().max_abs_entry() < 1e-8);
        for eta in [1e-3, 0.05, 0.2] {
            let c = gaussian_ula_stationary_cov(&p, eta).unwrap();
            for j in 0..2 {
                assert!(c.get(j, j) >= exact.get(j, j));
            }
        }
    }

    #[test]
    fn stationary_cov_unavailable_for_logcosh() {
        let p = PotentialSpec::log_cosh_regularized(1.0, 2.0, 2).unwrap();
        assert!(matches!(gaussian_ula_stationary_cov(&p, 0.1), Err(Error::Unavailable(_))));
    }

    #[test]
    fn ar1_small_blocks() {
        let s = Ar1Spec::from_ula(1.0, 0.1, 1).unwrap();
        let t = ar1_autocovariance(&s).unwrap();
        assert_relative_eq!(t.get(0, 0), 1.0 / 0.95, epsilon = 1e-14);
        assert_relative_eq!(ar1_lambda_max(&s).unwrap(), 1.0 / 0.95, epsilon = 1e-14);

        let s = Ar1Spec::from_ula(1.0, 0.1, 2).unwrap();
        let t = ar1_autocovariance(&s).unwrap();
        let var = 1.0 / 0.95;
        assert_relative_eq!(t.get(0, 1), 0.9 * var, epsilon = 1e-14);
        assert_relative_eq!(t.get(1, 1), var, epsilon = 1e-14);
        assert_relative_eq!(s.stationary_variance(), 1.0 / (1.0 * (1.0 - 0.1 / 2.0)), epsilon = 1e-14);
    }

    #[test]
    fn ar1_spec_validation() {
        assert!(Ar1Spec::new(1.0, 1.0, 3).is_err());
        assert!(Ar1Spec::new(0.5, 0.0, 3).is_err());
        assert!(Ar1Spec::new(0.5, 1.0, 0).is_err());
        assert!(ar1_autocovariance(&Ar1Spec::new(0.5, 1.0, AR1_MAX_DIM + 1).unwrap()).is_err());
    }

    #[test]
    fn ar1_lambda_max_increases_toward_joint_lsi() {
        let mut prev = 0.0;
        for n in [8, 32, 128, 512] {
            let l = ar1_lambda_max(&Ar1Spec::from_ula(1.0, 0.1, n).unwrap()).unwrap();
            assert!(l > prev);
            assert!(l < 20.0);
            prev = l;
        }
    }

    #[test]
    fn mean_variance_two_routes() {
        let s = Ar1Spec::from_ula(1.0, 0.1, 37).unwrap();
        let t = ar1_autocovariance(&s).unwrap();
        let ones = vec![1.0; 37];
        let direct = t.quadratic_form(&ones) / (37.0 * 37.0);
        assert_relative_eq!(ar1_mean_variance(&s), direct, max_relative = 1e-12);
    }

    #[test]
    fn poincare_examples() {
        assert_relative_eq!(poincare_mean_bound(20.0, 100).unwrap(), 0.2);
        assert!(poincare_mean_bound(20.0, 0).is_err());
        assert!(poincare_mean_bound(20.0, u64::MAX).unwrap() < 1e-17);
        for n in 1..=500 {
            let s = Ar1Spec::from_ula(1.0, 0.1, n).unwrap();
            assert!(ar1_mean_variance(&s) <= poincare_mean_bound(20.0, n as u64).unwrap());
        }
    }

    #[test]
    fn w2_examples() {
        let i2 = SymMatrix::identity(2);
        assert!(gaussian_w2(&[0.0, 1.0], &i2, &[0.0, 1.0], &i2).unwrap() < 1e-7);
        for sigma in [0.3_f64, 1.0, 2.5] {
            let w = gaussian_w2(
                &[0.0],
                &SymMatrix::from_diagonal(&[1.0]),
                &[0.0],
                &SymMatrix::from_diagonal(&[sigma * sigma]),
            )
            .unwrap();
            assert_relative_eq!(w, (1.0 - sigma).abs(), epsilon = 1e-12);
        }
        let w = gaussian_w2(&[0.0, 0.0], &i2, &[1.0, 0.0], &SymMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        assert_relative_eq!(w, 2.0_f64.sqrt(), epsilon = 1e-12);
        let bad = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(gaussian_w2(&[0.0, 0.0], &bad, &[0.0, 0.0], &i2), Err(Error::Input(_))));
    }

    #[test]
    fn w2_non_commuting_matches_scalar_reduction() {
        // rotate both covariances by the same orthogonal matrix: distance unchanged
        let (c, s) = (0.6_f64, 0.8_f64);
        let rot = |a: f64, b: f64| {
            SymMatrix::from_rows(&[
                vec![c * c * a + s * s * b, c * s * (a - b)],
                vec![c * s * (a - b), s * s * a + c * c * b],
            ])
            .unwrap()
        };
        let w = gaussian_w2(&[0.0, 0.0], &rot(1.0, 4.0), &[0.0, 0.0], &rot(9.0, 1.0)).unwrap();
        let expect = ((1.0_f64 - 3.0).powi(2) + (2.0_f64 - 1.0).powi(2)).sqrt();
        assert_relative_eq!(w, expect, epsilon = 1e-10);
    }

    #[test]
    fn moment_bound_examples() {
        let p = PotentialSpec::gaussian_iso(2.0, 4).unwrap();
        assert_relative_eq!(bound_moment(&p, 0.1, &MomentBound::Target).unwrap(), 2.0);
        let x0 = vec![1.0, -1.0, 0.5, 2.0];
        let sq = 1.0 + 1.0 + 0.25 + 4.0;
        let at0 = bound_moment(&p, 0.1, &MomentBound::AfterSteps { steps: 0, start: x0.clone() }).unwrap();
        assert_relative_eq!(at0, sq);
        let inf = bound_moment(&p, 0.1, &MomentBound::AfterSteps { steps: u64::MAX, start: x0.clone() }).unwrap();
        assert_eq!(inf, bound_moment(&p, 0.1, &MomentBound::Stationary).unwrap());
        assert!(bound_moment(&p, 0.1, &MomentBound::AfterSteps { steps: 3, start: vec![0.0] }).is_err());
        assert!(bound_moment(&p, 0.6, &MomentBound::Stationary).is_err());
    }

    #[test]
    fn moment_bound_covers_exact_gaussian_moments() {
        let p = PotentialSpec::gaussian_diag(vec![0.5, 1.0, 3.0]).unwrap();
        let eta = 0.1;
        let exact_pi = p.true_covariance().unwrap().trace();
        let exact_pi_eta = gaussian_ula_stationary_cov(&p, eta).unwrap().trace();
        assert!(exact_pi <= bound_moment(&p, eta, &MomentBound::Target).unwrap());
        assert!(exact_pi_eta <= bound_moment(&p, eta, &MomentBound::Stationary).unwrap());
    }

    #[test]
    fn w2_bound_examples() {
        let p = PotentialSpec::gaussian_iso(1.0, 1).unwrap();
        let a = bound_w2(&p, 0.01, &W2Bound::Discretization).unwrap();
        assert_relative_eq!(a, 0.080_400_666_666_666_67, epsilon = 1e-15);
        let b = bound_w2(&p, 0.01, &W2Bound::AfterSteps { steps: 0, start: vec![0.0] }).unwrap();
        assert_relative_eq!(b, 2.0);
        // geometric decay: halves every log 2 / log(1/(1 − αη)) steps
        let eta = 0.001;
        let half = (2.0_f64.ln() / -(1.0_f64 - eta).ln()).round() as u64;
        let b0 = bound_w2(&p, eta, &W2Bound::AfterSteps { steps: 100, start: vec![3.0] }).unwrap();
        let b1 = bound_w2(&p, eta, &W2Bound::AfterSteps { steps: 100 + half, start: vec![3.0] }).unwrap();
        assert_relative_eq!(b1 / b0, 0.5, max_relative = 1e-3);
    }

    #[test]
    fn cov_diff_examples() {
        assert_eq!(bound_cov_diff(3.0, 5.0, 0.0, CovDiffBound::Covariance).unwrap(), 0.0);
        assert_relative_eq!(bound_cov_diff(1.0, 1.0, 0.5, CovDiffBound::Covariance).unwrap(), 2.0);
        assert_relative_eq!(bound_cov_diff(1.0, 1.0, 0.5, CovDiffBound::SecondMoment).unwrap(), 1.0);
        assert!(bound_cov_diff(-1.0, 1.0, 0.5, CovDiffBound::Covariance).is_err());
        // N(0,1) vs N(0,σ²) about z = 0
        for sigma in [0.5_f64, 1.7] {
            let bound = bound_cov_diff(1.0, sigma * sigma, (1.0 - sigma).abs(), CovDiffBound::Covariance).unwrap();
            assert_relative_eq!(bound, 2.0 * (1.0 - sigma * sigma).abs(), epsilon = 1e-14);
            assert!(bound >= (1.0 - sigma * sigma).abs());
        }
    }

    #[test]
    fn exact_bias_dominated_with_exact_ingredients() {
        for lam in [vec![1.0], vec![0.5, 2.0], vec![1.0, 2.0, 3.0, 8.0]] {
            let p = PotentialSpec::gaussian_diag(lam).unwrap();
            for eta in [1e-3, 1e-2, 0.1] {
                if eta * p.beta() >= 1.0 {
                    continue;
                }
                let c_eta = gaussian_ula_stationary_cov(&p, eta).unwrap();
                let c = p.true_covariance().unwrap();
                let gap = c_eta.sub(&c).unwrap().operator_norm(1e-12).unwrap();
                let zero = vec![0.0; p.dim()];
                let w2 = gaussian_w2(&zero, &c_eta, &zero, &c).unwrap();
                let bound = bound_cov_diff(c_eta.trace(), c.trace(), w2, CovDiffBound::Covariance).unwrap();
                assert!(gap <= bound, "gap {gap} > bound {bound}");
                assert!(gap < discretization_bias_bound(&p, eta).unwrap());
            }
        }
    }
}
