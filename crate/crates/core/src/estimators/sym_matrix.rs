use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng::{GaussianInnovations, Innovations, StreamKey};

/// Dimension at or below which [`SymMatrix::operator_norm`] uses a dense
/// symmetric eigensolver; above it, power iteration.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;

const POWER_MAX_ITER: usize = 200_000;

/// Dense symmetric matrix, stored in full row-major order.
///
/// Constructors symmetrize their input, so `get(i, j) == get(j, i)` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Serialized form: dimension plus the upper triangle, row by row.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymMatrixRepr {
    dim: usize,
    upper: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;
    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        SymMatrix::from_upper(r.dim, &r.upper)
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        SymMatrixRepr {
            dim: m.dim,
            upper: m.upper_triangle(),
        }
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds from a square row-major buffer, replacing it by `(A + Aᵀ)/2`.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(input(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self::from_fn(dim, |i, j| {
            0.5 * (data[i * dim + j] + data[j * dim + i])
        }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(input("matrix rows must form a square array"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(dim, &flat)
    }

    /// Inverse of [`SymMatrix::upper_triangle`].
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(input(format!(
                "upper triangle of a {dim}x{dim} matrix has {} entries, got {}",
                dim * (dim + 1) / 2,
                upper.len()
            )));
        }
        let mut it = upper.iter();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = *it.next().expect("length checked");
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        Ok(m)
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1) / 2);
        for i in 0..self.dim {
            out.extend_from_slice(&self.data[i * self.dim + i..(i + 1) * self.dim]);
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(input(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_map(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `A x` written into `out`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `uᵀ A u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.data
            .chunks_exact(self.dim)
            .zip(u)
            .map(|(row, ui)| ui * row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numerical("matrix has non-finite entries".into()))
        }
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// All eigenvalues in ascending order (dense solver).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_finite()?;
        if self.dim == 0 {
            return Ok(Vec::new());
        }
        let mut ev: Vec<f64> = self.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Eigenvalues (ascending) and matching unit eigenvectors.
    pub fn eigen(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.ensure_finite()?;
        let eig = SymmetricEigen::new(self.to_nalgebra());
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        Ok((values, vectors))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    /// Largest absolute eigenvalue, to relative accuracy `tol`.
    ///
    /// Dense eigensolve up to [`DENSE_EIGEN_MAX_DIM`], power iteration above.
    pub fn operator_norm(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(input("operator_norm tolerance must be positive"));
        }
        self.ensure_finite()?;
        if self.dim <= DENSE_EIGEN_MAX_DIM {
            let ev = self.eigenvalues()?;
            Ok(ev.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        } else {
            self.power_operator_norm(tol)
        }
    }

    /// Power iteration on `A`, tracking `‖A v‖` for unit `v`.
    ///
    /// For symmetric `A` the sequence `‖A v_k‖` is non-decreasing and converges
    /// to `max |λ|`, including when `±λ` are both extremal.
    pub fn power_operator_norm(&self, tol: f64) -> Result<f64> {
        self.ensure_finite()?;
        let d = self.dim;
        if d == 0 || self.max_abs_entry() == 0.0 {
            return Ok(0.0);
        }
        let mut v = vec![0.0; d];
        GaussianInnovations::new(StreamKey::from_seed(0x0B5E_55ED)).fill(1, &mut v);
        normalize(&mut v);
        let mut w = vec![0.0; d];
        let mut sigma = 0.0_f64;
        let mut calm = 0;
        for _ in 0..POWER_MAX_ITER {
            self.mul_vec_into(&v, &mut w);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                // v landed in the kernel; restart from a different direction.
                GaussianInnovations::new(StreamKey::from_seed(0x0B5E_55ED)).fill(2, &mut v);
                normalize(&mut v);
                continue;
            }
            let change = (norm - sigma).abs();
            sigma = sigma.max(norm);
            // Require several consecutive quiet iterations; the first few
            // increments of a slowly converging sequence can already be small.
            if change <= 0.1 * tol * sigma {
                calm += 1;
                if calm >= 5 {
                    return Ok(sigma);
                }
            } else {
                calm = 0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / norm;
            }
        }
        Err(Error::Numerical(format!(
            "power iteration did not converge in {POWER_MAX_ITER} iterations"
        )))
    }

    /// Applies `g` to the eigenvalues: `V g(Λ) Vᵀ`.
    pub fn map_spectrum(&self, g: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let (values, vectors) = self.eigen()?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for (lam, v) in values.iter().zip(&vectors) {
            let gl = g(*lam);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += gl * v[i] * v[j];
                }
            }
        }
        SymMatrix::from_row_major(d, &out)
    }

    /// Principal square root of a PSD matrix.
    ///
    /// Eigenvalues in `[-clamp_tol·scale, 0)` are treated as zero; anything
    /// more negative is rejected.
    pub fn sqrt_psd(&self, clamp_tol: f64) -> Result<SymMatrix> {
        let scale = self.max_abs_entry().max(1.0);
        let min = self.min_eigenvalue()?;
        if min < -clamp_tol * scale {
            return Err(input(format!(
                "matrix is not positive semi-definite (smallest eigenvalue {min:e})"
            )));
        }
        self.map_spectrum(|l| l.max(0.0).sqrt())
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
