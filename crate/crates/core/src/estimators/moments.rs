use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{input, Error, Result};
use crate::sampler::SampleBlock;

/// Compensated running sum. Each addition recovers its exact rounding error
/// with the branch-free two-sum, so the carry never depends on operand order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        let bp = t - self.sum;
        self.carry += (self.sum - (t - bp)) + (x - bp);
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Single-pass, mergeable accumulator for sample moments.
///
/// Sums are kept about a fixed shift (the first row pushed), which removes
/// the cancellation of the raw `ΣxxT/n − x̄x̄T` form when the mean is large
/// relative to the spread.
#[derive(Clone, Debug)]
pub struct MomentAccumulator {
    dim: usize,
    count: u64,
    shift: Vec<f64>,
    sum: Vec<CompensatedSum>,
    /// Packed upper triangle of Σ (x - shift)(x - shift)ᵀ.
    sum_sq: Vec<CompensatedSum>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            dim,
            count: 0,
            shift: vec![0.0; dim],
            sum: vec![CompensatedSum::default(); dim],
            sum_sq: vec![CompensatedSum::default(); dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Adds one row. The caller guarantees `x.len() == dim`.
    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        if self.count == 0 {
            self.shift.copy_from_slice(x);
        }
        self.count += 1;
        let d = self.dim;
        let (x, shift) = (&x[..d], &self.shift[..d]);
        let mut k = 0;
        for i in 0..d {
            let yi = x[i] - shift[i];
            self.sum[i].add(yi);
            for j in i..d {
                self.sum_sq[k].add(yi * (x[j] - shift[j]));
                k += 1;
            }
        }
    }

    /// Folds `other` into `self`. Merging in a fixed order is deterministic.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.dim != self.dim {
            return Err(input("cannot merge accumulators of different dimension"));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        // Re-express other's sums about self.shift: y' = y + δ with δ = other.shift − self.shift.
        let delta: Vec<f64> = other
            .shift
            .iter()
            .zip(&self.shift)
            .map(|(a, b)| a - b)
            .collect();
        let n = other.count as f64;
        let s1: Vec<f64> = other.sum.iter().map(CompensatedSum::value).collect();
        let mut k = 0;
        for i in 0..self.dim {
            self.sum[i].merge(&other.sum[i]);
            self.sum[i].add(n * delta[i]);
            for j in i..self.dim {
                self.sum_sq[k].merge(&other.sum_sq[k]);
                self.sum_sq[k].add(s1[i] * delta[j] + delta[i] * s1[j] + n * delta[i] * delta[j]);
                k += 1;
            }
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish(&self) -> Result<MomentSummary> {
        if self.count == 0 {
            return Err(input("sample moments need at least one row"));
        }
        let n = self.count as f64;
        let centered_mean: Vec<f64> = self.sum.iter().map(|s| s.value() / n).collect();
        let packed: Vec<f64> = self.sum_sq.iter().map(|s| s.value() / n).collect();
        let about_shift = SymMatrix::from_upper(self.dim, &packed)?;
        let covariance = about_shift.sub(&SymMatrix::outer(&centered_mean))?;
        let mean: Vec<f64> = self
            .shift
            .iter()
            .zip(&centered_mean)
            .map(|(s, c)| s + c)
            .collect();
        let second_moment = covariance.add(&SymMatrix::outer(&mean))?;
        if !covariance.is_finite() {
            return Err(Error::Numerical("non-finite sample covariance".into()));
        }
        Ok(MomentSummary {
            count: self.count,
            mean,
            second_moment,
            covariance,
        })
    }
}

/// Sample mean, raw second moment and covariance with the `1/n` convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentSummaryRepr", into = "MomentSummaryRepr")]
pub struct MomentSummary {
    pub count: u64,
    pub mean: Vec<f64>,
    pub second_moment: SymMatrix,
    pub covariance: SymMatrix,
}

/// JSON form: mean vector plus the upper-triangular covariance.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentSummaryRepr {
    count: u64,
    dim: usize,
    mean: Vec<f64>,
    covariance_upper: Vec<f64>,
}

impl From<MomentSummary> for MomentSummaryRepr {
    fn from(m: MomentSummary) -> Self {
        MomentSummaryRepr {
            count: m.count,
            dim: m.mean.len(),
            covariance_upper: m.covariance.upper_triangle(),
            mean: m.mean,
        }
    }
}

impl TryFrom<MomentSummaryRepr> for MomentSummary {
    type Error = Error;
    fn try_from(r: MomentSummaryRepr) -> Result<Self> {
        if r.mean.len() != r.dim {
            return Err(input("mean length does not match dim"));
        }
        let covariance = SymMatrix::from_upper(r.dim, &r.covariance_upper)?;
        let second_moment = covariance.add(&SymMatrix::outer(&r.mean))?;
        Ok(MomentSummary {
            count: r.count,
            mean: r.mean,
            second_moment,
            covariance,
        })
    }
}

/// Moments of the rows of a block: `x̄ = (1/n)Σx` and `Σ̂ = (1/n)ΣxxT − x̄x̄T`.
pub fn sample_moments(block: &SampleBlock) -> Result<MomentSummary> {
    if block.rows() == 0 {
        return Err(input("sample block is empty"));
    }
    let mut acc = MomentAccumulator::new(block.cols());
    for row in block.iter_rows() {
        acc.push(row);
    }
    acc.finish()
}

/// Splits `Σ̂` about a reference mean `r`:
/// returns `((1/n)Σ(x−r)(x−r)T, (x̄−r)(x̄−r)T)`, whose difference is `Σ̂`.
pub fn centered_decomposition_terms(
    block: &SampleBlock,
    reference_mean: &[f64],
) -> Result<(SymMatrix, SymMatrix)> {
    centered_terms_from_summary(&sample_moments(block)?, reference_mean)
}

/// Same as [`centered_decomposition_terms`], from already accumulated moments.
pub fn centered_terms_from_summary(
    summary: &MomentSummary,
    reference_mean: &[f64],
) -> Result<(SymMatrix, SymMatrix)> {
    if reference_mean.len() != summary.mean.len() {
        return Err(input(format!(
            "reference mean has length {}, block has {} columns",
            reference_mean.len(),
            summary.mean.len()
        )));
    }
    let offset: Vec<f64> = summary
        .mean
        .iter()
        .zip(reference_mean)
        .map(|(m, r)| m - r)
        .collect();
    let mean_term = SymMatrix::outer(&offset);
    let second_term = summary.covariance.add(&mean_term)?;
    Ok((second_term, mean_term))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SampleBlock;
    use approx::assert_relative_eq;

    fn block(rows: &[&[f64]]) -> SampleBlock {
        let cols = rows[0].len();
        SampleBlock::from_rows(cols, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let m = sample_moments(&block(&[&[1.0, 0.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!(m.mean, vec![0.0, 0.0]);
        assert_eq!(m.covariance.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn single_row_has_zero_covariance() {
        let m = sample_moments(&block(&[&[3.0]])).unwrap();
        assert_eq!(m.mean, vec![3.0]);
        assert_eq!(m.covariance.get(0, 0), 0.0);
    }

    #[test]
    fn uses_one_over_n() {
        let m = sample_moments(&block(&[&[1.0], &[2.0], &[3.0]])).unwrap();
        assert_relative_eq!(m.mean[0], 2.0);
        assert_relative_eq!(m.covariance.get(0, 0), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_block_is_input_error() {
        let b = SampleBlock::from_rows(2, Vec::new()).unwrap();
        assert!(matches!(sample_moments(&b), Err(Error::Input(_))));
        assert!(MomentAccumulator::new(2).finish().is_err());
    }

    #[test]
    fn centered_terms_examples() {
        let b = block(&[&[1.0], &[3.0]]);
        let (t1, t2) = centered_decomposition_terms(&b, &[2.0]).unwrap();
        assert_eq!(t1.get(0, 0), 1.0);
        assert_eq!(t2.get(0, 0), 0.0);

        let b = block(&[&[1.0, 2.0], &[0.5, -1.0], &[2.0, 0.0]]);
        let m = sample_moments(&b).unwrap();
        let (_, t2) = centered_decomposition_terms(&b, &m.mean).unwrap();
        assert_eq!(t2.max_abs_entry(), 0.0);

        let (t1, t2) = centered_decomposition_terms(&b, &[10.0, -4.0]).unwrap();
        let diff = t1.sub(&t2).unwrap().sub(&m.covariance).unwrap();
        assert!(diff.max_abs_entry() < 1e-12);

        assert!(centered_decomposition_terms(&b, &[1.0]).is_err());
    }

    #[test]
    fn covariance_matches_second_moment_identity() {
        let b = block(&[&[1.0, 2.0], &[0.5, -1.0], &[2.0, 0.0], &[7.0, 3.0]]);
        let m = sample_moments(&b).unwrap();
        let recon = m.second_moment.sub(&SymMatrix::outer(&m.mean)).unwrap();
        assert!(recon.sub(&m.covariance).unwrap().max_abs_entry() <= 1e-12);
    }

    #[test]
    fn merge_equals_single_pass() {
        let rows: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 * 0.1 + 1e3).collect();
        let mut whole = MomentAccumulator::new(3);
        let mut parts = [MomentAccumulator::new(3), MomentAccumulator::new(3), MomentAccumulator::new(3)];
        for (k, r) in rows.chunks(3).enumerate() {
            whole.push(r);
            parts[k % 3].push(r);
        }
        let [mut a, b, c] = parts;
        a.merge(&b).unwrap();
        a.merge(&c).unwrap();
        let x = whole.finish().unwrap();
        let y = a.finish().unwrap();
        assert_eq!(x.count, y.count);
        for i in 0..3 {
            assert_relative_eq!(x.mean[i], y.mean[i], max_relative = 1e-14);
        }
        assert!(x.covariance.sub(&y.covariance).unwrap().max_abs_entry() < 1e-10);
    }

    #[test]
    fn json_keeps_mean_and_upper_covariance() {
        let m = sample_moments(&block(&[&[1.0, 2.0], &[0.5, -1.0], &[2.0, 0.0]])).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["covariance_upper"].as_array().unwrap().len(), 3);
        let back: MomentSummary = serde_json::from_value(v).unwrap();
        assert_eq!(back.covariance, m.covariance);
        assert_eq!(back.mean, m.mean);
    }
}
