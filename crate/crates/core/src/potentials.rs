//! Target distributions `π ∝ exp(−f)` with `α I ⪯ ∇²f ⪯ β I`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, input, Error, Result};
use crate::estimators::SymMatrix;

/// Problem constants consumed by the planner and the bound evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
}

impl Constants {
    pub fn new(alpha: f64, beta: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(config(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= alpha) {
            return Err(config(format!("beta must satisfy alpha <= beta < inf, got alpha={alpha}, beta={beta}")));
        }
        if dim == 0 {
            return Err(config("dimension must be at least 1"));
        }
        Ok(Constants { alpha, beta, dim })
    }

    /// Checks `0 < eta < 1/beta`.
    pub fn check_step(&self, eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(config(format!("step size must be positive, got {eta}")));
        }
        if eta * self.beta >= 1.0 {
            return Err(config(format!(
                "step size {eta} violates eta < 1/beta = {}",
                1.0 / self.beta
            )));
        }
        Ok(())
    }
}

/// Interface the sampler and harness consume.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out`. Both slices have length `dim()`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn minimizer(&self) -> &[f64];

    /// Certified or caller-asserted `(α, β)`; `None` for unchecked black boxes.
    fn constants(&self) -> Option<Constants>;

    /// Diagonal of the precision matrix for Gaussian targets.
    fn precision_diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    fn label(&self) -> String;

    /// Checked gradient.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(input(format!(
                "point has length {}, potential has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        Ok(g)
    }

    /// `Cov(π)`, when available in closed form.
    fn true_covariance(&self) -> Option<SymMatrix> {
        self.precision_diagonal()
            .map(|p| SymMatrix::from_diagonal(&p.iter().map(|l| 1.0 / l).collect::<Vec<_>>()))
    }
}

/// Tag for the shipped potential families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    GaussianIso,
    GaussianDiag,
    LogCoshRegularized,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Iso,
    Diag(Vec<f64>),
    /// `f(x) = (a/2)|x|² + (b − a) Σ log cosh(x_j)`, with a = alpha, b = beta.
    LogCosh,
}

/// One of the shipped potentials with certified `(α, β)`.
///
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialConfig", into = "PotentialConfig")]
pub struct PotentialSpec {
    shape: Shape,
    dim: usize,
    alpha: f64,
    beta: f64,
    minimizer: Vec<f64>,
}

impl PotentialSpec {
    /// `f(x) = (α/2)|x − x*|²` with `x* = 0`.
    pub fn gaussian_iso(alpha: f64, dim: usize) -> Result<Self> {
        let c = Constants::new(alpha, alpha, dim)?;
        Ok(PotentialSpec {
            shape: Shape::Iso,
            dim,
            alpha: c.alpha,
            beta: c.beta,
            minimizer: vec![0.0; dim],
        })
    }

    /// `f(x) = ½ Σ λ_j (x_j − x*_j)²` with `x* = 0`.
    pub fn gaussian_diag(precision: Vec<f64>) -> Result<Self> {
        if precision.is_empty() {
            return Err(config("precision must be non-empty"));
        }
        if precision.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(config("precision entries must be positive and finite"));
        }
        let alpha = precision.iter().copied().fold(f64::INFINITY, f64::min);
        let beta = precision.iter().copied().fold(0.0, f64::max);
        let dim = precision.len();
        Ok(PotentialSpec {
            shape: Shape::Diag(precision),
            dim,
            alpha,
            beta,
            minimizer: vec![0.0; dim],
        })
    }

    /// `f(x) = (a/2)|x|² + (b − a) Σ log cosh(x_j)`; Hessian spectrum lies in `[a, b]`.
    pub fn log_cosh_regularized(a: f64, b: f64, dim: usize) -> Result<Self> {
        let c = Constants::new(a, b, dim)?;
        Ok(PotentialSpec {
            shape: Shape::LogCosh,
            dim,
            alpha: c.alpha,
            beta: c.beta,
            minimizer: vec![0.0; dim],
        })
    }

    /// Moves a Gaussian target's mode. The log-cosh family is symmetric about 0.
    pub fn with_minimizer(mut self, minimizer: Vec<f64>) -> Result<Self> {
        if minimizer.len() != self.dim {
            return Err(config(format!(
                "minimizer has length {}, dimension is {}",
                minimizer.len(),
                self.dim
            )));
        }
        if matches!(self.shape, Shape::LogCosh) && minimizer.iter().any(|v| *v != 0.0) {
            return Err(config("log_cosh_regularized has its minimizer fixed at 0"));
        }
        self.minimizer = minimizer;
        Ok(self)
    }

    pub fn kind(&self) -> PotentialKind {
        match self.shape {
            Shape::Iso => PotentialKind::GaussianIso,
            Shape::Diag(_) => PotentialKind::GaussianDiag,
            Shape::LogCosh => PotentialKind::LogCoshRegularized,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn certified_constants(&self) -> Constants {
        Constants {
            alpha: self.alpha,
            beta: self.beta,
            dim: self.dim,
        }
    }
}

#[inline]
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Potential for PotentialSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let xs = &self.minimizer;
        match &self.shape {
            Shape::Iso => {
                0.5 * self.alpha * x.iter().zip(xs).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }
            Shape::Diag(p) => {
                0.5 * x
                    .iter()
                    .zip(xs)
                    .zip(p)
                    .map(|((a, b), l)| l * (a - b).powi(2))
                    .sum::<f64>()
            }
            Shape::LogCosh => x
                .iter()
                .map(|&v| 0.5 * self.alpha * v * v + (self.beta - self.alpha) * log_cosh(v))
                .sum(),
        }
    }

    #[inline]
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let xs = &self.minimizer;
        match &self.shape {
            Shape::Iso => {
                for ((o, a), b) in out.iter_mut().zip(x).zip(xs) {
                    *o = self.alpha * (a - b);
                }
            }
            Shape::Diag(p) => {
                for (((o, a), b), l) in out.iter_mut().zip(x).zip(xs).zip(p) {
                    *o = l * a - l * b;
                }
            }
            Shape::LogCosh => {
                let c = self.beta - self.alpha;
                for (o, &a) in out.iter_mut().zip(x) {
                    *o = self.alpha * a + c * a.tanh();
                }
            }
        }
    }

    fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    fn constants(&self) -> Option<Constants> {
        Some(self.certified_constants())
    }

    fn precision_diagonal(&self) -> Option<Vec<f64>> {
        match &self.shape {
            Shape::Iso => Some(vec![self.alpha; self.dim]),
            Shape::Diag(p) => Some(p.clone()),
            Shape::LogCosh => None,
        }
    }

    fn label(&self) -> String {
        match &self.shape {
            Shape::Iso => format!("gaussian_iso(alpha={}, dim={})", self.alpha, self.dim),
            Shape::Diag(p) => format!("gaussian_diag(precision={p:?})"),
            Shape::LogCosh => format!(
                "log_cosh_regularized(a={}, b={}, dim={})",
                self.alpha, self.beta, self.dim
            ),
        }
    }
}

/// JSON form of a potential, e.g. `{"kind": "gaussian_diag", "precision": [1.0, 4.0]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    GaussianIso {
        alpha: f64,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        minimizer: Option<Vec<f64>>,
    },
    GaussianDiag {
        precision: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        minimizer: Option<Vec<f64>>,
    },
    LogCoshRegularized {
        a: f64,
        b: f64,
        dim: usize,
    },
}

impl TryFrom<PotentialConfig> for PotentialSpec {
    type Error = Error;
    fn try_from(c: PotentialConfig) -> Result<Self> {
        let (spec, minimizer) = match c {
            PotentialConfig::GaussianIso {
                alpha,
                dim,
                minimizer,
            } => (PotentialSpec::gaussian_iso(alpha, dim)?, minimizer),
            PotentialConfig::GaussianDiag {
                precision,
                minimizer,
            } => (PotentialSpec::gaussian_diag(precision)?, minimizer),
            PotentialConfig::LogCoshRegularized { a, b, dim } => {
                (PotentialSpec::log_cosh_regularized(a, b, dim)?, None)
            }
        };
        match minimizer {
            Some(m) => spec.with_minimizer(m),
            None => Ok(spec),
        }
    }
}

impl From<PotentialSpec> for PotentialConfig {
    fn from(p: PotentialSpec) -> Self {
        let minimizer = p.minimizer.iter().any(|v| *v != 0.0).then_some(p.minimizer);
        match p.shape {
            Shape::Iso => PotentialConfig::GaussianIso {
                alpha: p.alpha,
                dim: p.dim,
                minimizer,
            },
            Shape::Diag(precision) => PotentialConfig::GaussianDiag {
                precision,
                minimizer,
            },
            Shape::LogCosh => PotentialConfig::LogCoshRegularized {
                a: p.alpha,
                b: p.beta,
                dim: p.dim,
            },
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Caller-supplied potential.
///
/// The sampler runs it as-is; anything that needs `(α, β)` (step-size checks,
/// planning, bounds) refuses it unless the caller asserts them.
#[derive(Clone)]
pub struct CustomPotential {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    minimizer: Vec<f64>,
    asserted: Option<Constants>,
    name: String,
}

impl CustomPotential {
    pub fn new(
        name: impl Into<String>,
        minimizer: Vec<f64>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if minimizer.is_empty() {
            return Err(config("custom potential needs a non-empty minimizer"));
        }
        Ok(CustomPotential {
            dim: minimizer.len(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            minimizer,
            asserted: None,
            name: name.into(),
        })
    }

    /// Declares `(α, β)` on the caller's authority.
    pub fn assert_constants(mut self, alpha: f64, beta: f64) -> Result<Self> {
        self.asserted = Some(Constants::new(alpha, beta, self.dim)?);
        Ok(self)
    }
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("asserted", &self.asserted)
            .finish_non_exhaustive()
    }
}

impl Potential for CustomPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    fn constants(&self) -> Option<Constants> {
        self.asserted
    }

    fn label(&self) -> String {
        format!("custom({})", self.name)
    }
}

/// Constants of `p`, or a configuration error for unasserted black boxes.
pub fn require_constants<P: Potential + ?Sized>(p: &P) -> Result<Constants> {
    p.constants().ok_or_else(|| {
        config(format!(
            "{} has no certified (alpha, beta); assert them before planning",
            p.label()
        ))
    })
}
