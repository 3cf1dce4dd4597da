//! Counter-based random streams.
//!
//! Every Gaussian innovation is a pure function of `(seed, stream path, step)`.
//! A [`StreamKey`] names one stream; [`StreamKey::child`] splits it into an
//! arbitrary number of independent sub-streams (replications, chains), and
//! [`StreamKey::counter_rng`] yields a short-lived generator for one step. No
//! generator state is shared between chains, so results do not depend on
//! how work is scheduled.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const CHILD_SALT: u64 = 0xD6E8_FEB8_6659_FD93;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn from_seed(seed: u64) -> Self {
        StreamKey(mix64(seed ^ SEED_SALT))
    }

    /// Derives the `index`-th sub-stream.
    #[inline]
    pub fn child(self, index: u64) -> Self {
        let tag = mix64(index.wrapping_add(1).wrapping_mul(CHILD_SALT));
        StreamKey(mix64(self.0.rotate_left(17) ^ tag))
    }

    /// Generator for counter position `counter` of this stream.
    #[inline]
    pub fn counter_rng(self, counter: u64) -> CounterRng {
        CounterRng {
            state: mix64(self.0 ^ mix64(counter.wrapping_mul(GOLDEN_GAMMA))),
        }
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// SplitMix64 generator started at a hashed counter position.
#[derive(Clone, Debug)]
pub struct CounterRng {
    state: u64,
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Source of the standard Gaussian innovations `Z_i` driving a chain.
///
/// Steps are numbered from 1, matching the recursion's indexing.
pub trait Innovations {
    fn fill(&mut self, step: u64, z: &mut [f64]);
}

/// i.i.d. N(0, I) innovations keyed by step.
#[derive(Clone, Copy, Debug)]
pub struct GaussianInnovations {
    key: StreamKey,
}

impl GaussianInnovations {
    pub fn new(key: StreamKey) -> Self {
        GaussianInnovations { key }
    }
}

impl Innovations for GaussianInnovations {
    #[inline]
    fn fill(&mut self, step: u64, z: &mut [f64]) {
        let mut rng = self.key.counter_rng(step);
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
    }
}

/// Fixed innovation sequence for exact tests of the recursion.
///
/// Step `i` receives `rows[i - 1]`; steps past the end receive zeros.
#[derive(Clone, Debug, Default)]
pub struct InjectedInnovations {
    rows: Vec<Vec<f64>>,
}

impl InjectedInnovations {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        InjectedInnovations { rows }
    }

    pub fn zeros() -> Self {
        InjectedInnovations::default()
    }
}

impl Innovations for InjectedInnovations {
    fn fill(&mut self, step: u64, z: &mut [f64]) {
        match step
            .checked_sub(1)
            .and_then(|i| self.rows.get(i as usize))
        {
            Some(row) => {
                z.fill(0.0);
                for (zi, &v) in z.iter_mut().zip(row) {
                    *zi = v;
                }
            }
            None => z.fill(0.0),
        }
    }
}
