//! The unadjusted Langevin recursion
//! `X_i = X_{i−1} − η ∇f(X_{i−1}) + √(2η) Z_i`, run as one long chain or as
//! many independent chains that keep only their last iterate.
//!
//! Burn-in iterates are never stored. Chain `k` of seed `s` draws its
//! innovations from `StreamKey::from_seed(s).child(k)`; a single chain is
//! chain 0, so a one-chain parallel run equals a one-sample single run.

mod block;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use block::{BlockMeta, SampleBlock, BLOCK_HEADER_LEN, BLOCK_MAGIC};

use crate::error::{config, input, Error, Result};
use crate::estimators::{MomentAccumulator, MomentSummary};
use crate::potentials::Potential;
use crate::rng::{GaussianInnovations, Innovations, StreamKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "single")]
    SingleChain,
    #[serde(rename = "parallel")]
    Parallel,
}

/// Run configuration for one sampler call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub eta: f64,
    pub burn_in: u64,
    /// Retained samples `n` (single chain) or number of chains `N` (parallel).
    pub count: u64,
    pub seed: u64,
    /// Starting point `X₀`; the potential's minimizer when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl ChainParams {
    pub fn new(eta: f64, burn_in: u64, count: u64, seed: u64) -> Self {
        ChainParams {
            eta,
            burn_in,
            count,
            seed,
            init: None,
        }
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    pub(crate) fn validate<P: Potential + ?Sized>(&self, p: &P) -> Result<()> {
        match p.constants() {
            Some(c) => c.check_step(self.eta)?,
            None if !(self.eta > 0.0 && self.eta.is_finite()) => {
                return Err(config(format!("step size must be positive, got {}", self.eta)))
            }
            None => {}
        }
        if self.count == 0 {
            return Err(config("sample or chain count must be at least 1"));
        }
        if let Some(x0) = &self.init {
            if x0.len() != p.dim() {
                return Err(config(format!(
                    "initial point has length {}, potential has dimension {}",
                    x0.len(),
                    p.dim()
                )));
            }
        }
        Ok(())
    }

    fn start<P: Potential + ?Sized>(&self, p: &P) -> Vec<f64> {
        self.init.clone().unwrap_or_else(|| p.minimizer().to_vec())
    }
}

/// One ULA update: `x − η∇f(x) + √(2η) z`.
pub fn ula_step<P: Potential + ?Sized>(p: &P, x: &[f64], eta: f64, z: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.dim() || z.len() != p.dim() {
        return Err(input("point and innovation must match the potential's dimension"));
    }
    if let Some(c) = p.constants() {
        c.check_step(eta)?;
    }
    let g = p.gradient(x)?;
    let noise = (2.0 * eta).sqrt();
    let out: Vec<f64> = x
        .iter()
        .zip(&g)
        .zip(z)
        .map(|((xi, gi), zi)| xi - eta * gi + noise * zi)
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 1 });
    }
    Ok(out)
}

/// Runs `burn_in + keep` steps from `x0`, handing each retained iterate to
/// `visit`. Returns the final iterate.
pub fn drive_chain<P, I, F>(
    p: &P,
    eta: f64,
    x0: &[f64],
    burn_in: u64,
    keep: u64,
    innovations: &mut I,
    mut visit: F,
) -> Result<Vec<f64>>
where
    P: Potential + ?Sized,
    I: Innovations,
    F: FnMut(&[f64]),
{
    let d = p.dim();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; d];
    let mut z = vec![0.0; d];
    let noise = (2.0 * eta).sqrt();
    for step in 1..=burn_in + keep {
        p.gradient_into(&x, &mut grad);
        innovations.fill(step, &mut z);
        let mut finite = true;
        for ((xi, gi), zi) in x.iter_mut().zip(&grad).zip(&z) {
            *xi = *xi - eta * gi + noise * zi;
            finite &= xi.is_finite();
        }
        if !finite {
            return Err(Error::NonFinite { step });
        }
        if step > burn_in {
            visit(&x);
        }
    }
    Ok(x)
}

fn meta<P: Potential + ?Sized>(p: &P, c: &ChainParams, mode: Mode) -> BlockMeta {
    BlockMeta {
        mode,
        params: c.clone(),
        potential: p.label(),
    }
}

/// Single chain; returns `X_{m+1..m+n}`.
pub fn run_single<P: Potential + ?Sized>(p: &P, c: &ChainParams) -> Result<SampleBlock> {
    let mut innovations = GaussianInnovations::new(StreamKey::from_seed(c.seed).child(0));
    run_single_with(p, c, &mut innovations)
}

/// Single chain driven by a caller-supplied innovation source.
pub fn run_single_with<P, I>(p: &P, c: &ChainParams, innovations: &mut I) -> Result<SampleBlock>
where
    P: Potential + ?Sized,
    I: Innovations,
{
    c.validate(p)?;
    let d = p.dim();
    let mut data = Vec::with_capacity(c.count as usize * d);
    drive_chain(p, c.eta, &c.start(p), c.burn_in, c.count, innovations, |x| {
        data.extend_from_slice(x)
    })?;
    Ok(SampleBlock::from_rows(d, data)?.with_meta(meta(p, c, Mode::SingleChain)))
}

/// Single chain streamed straight into a moment accumulator.
pub fn single_chain_moments<P: Potential + ?Sized>(p: &P, c: &ChainParams) -> Result<MomentSummary> {
    c.validate(p)?;
    let mut innovations = GaussianInnovations::new(StreamKey::from_seed(c.seed).child(0));
    let mut acc = MomentAccumulator::new(p.dim());
    drive_chain(p, c.eta, &c.start(p), c.burn_in, c.count, &mut innovations, |x| {
        acc.push(x)
    })?;
    acc.finish()
}

/// `N = c.count` independent chains of `m + 1` steps each; row `k` is `X^k_{m+1}`.
///
/// Chains run on the current rayon pool. Rows are written by chain index,
/// so the result does not depend on the number of workers.
pub fn run_parallel<P: Potential + ?Sized>(p: &P, c: &ChainParams) -> Result<SampleBlock> {
    c.validate(p)?;
    let d = p.dim();
    let root = StreamKey::from_seed(c.seed);
    let x0 = c.start(p);
    let mut data = vec![0.0; c.count as usize * d];
    data.par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(k, row)| -> Result<()> {
            let mut innovations = GaussianInnovations::new(root.child(k as u64));
            let last = drive_chain(p, c.eta, &x0, c.burn_in, 1, &mut innovations, |_| {})?;
            row.copy_from_slice(&last);
            Ok(())
        })?;
    Ok(SampleBlock::from_rows(d, data)?.with_meta(meta(p, c, Mode::Parallel)))
}
