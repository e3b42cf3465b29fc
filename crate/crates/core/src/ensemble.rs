//! Collections of `K` symmetric `p x p` matrices.
//!
//! An ensemble can be read block-wise (one matrix per class) or group-wise:
//! the group `(i, j)` is the `K`-vector of the `(i, j)` entries taken across
//! all blocks. The penalty, its proximal map, and its Jacobian all act
//! group-wise, while the log-determinant parts act block-wise.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GglError, Result};

/// Inputs whose asymmetry is below this (relative) level are averaged into
/// exact symmetry on construction; anything larger is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// An element of `(S^p)^K`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionEnsemble {
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl PrecisionEnsemble {
    /// Builds an ensemble from `K` square blocks of equal size.
    ///
    /// Blocks that are symmetric up to [`SYMMETRY_TOLERANCE`] are replaced by
    /// `(A + A^T) / 2`.
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(GglError::InvalidArgument(
                "an ensemble needs at least one block".into(),
            ));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(GglError::InvalidArgument("blocks must be non-empty".into()));
        }
        let mut out = Vec::with_capacity(blocks.len());
        for (k, mut b) in blocks.into_iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(GglError::ShapeMismatch {
                    expected: format!("{dim}x{dim}"),
                    got: format!("{}x{} (block {k})", b.nrows(), b.ncols()),
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(GglError::NonFinite(format!("block {k}")));
            }
            let asym = max_relative_asymmetry(&b);
            if asym > SYMMETRY_TOLERANCE {
                return Err(GglError::Validation(format!(
                    "block {k} is not symmetric (relative asymmetry {asym:.3e})"
                )));
            }
            symmetrize_in_place(&mut b);
            out.push(b);
        }
        Ok(PrecisionEnsemble { dim, blocks: out })
    }

    /// Wraps blocks the caller guarantees are exactly symmetric and of equal size.
    pub(crate) fn from_symmetric(blocks: Vec<DMatrix<f64>>) -> Self {
        let dim = blocks[0].nrows();
        debug_assert!(blocks
            .iter()
            .all(|b| b.nrows() == dim && b.ncols() == dim && b == &b.transpose()));
        PrecisionEnsemble { dim, blocks }
    }

    pub fn zeros(dim: usize, k_classes: usize) -> Self {
        PrecisionEnsemble {
            dim,
            blocks: vec![DMatrix::zeros(dim, dim); k_classes],
        }
    }

    pub fn identity(dim: usize, k_classes: usize) -> Self {
        PrecisionEnsemble {
            dim,
            blocks: vec![DMatrix::identity(dim, dim); k_classes],
        }
    }

    /// Builds an ensemble from an entry function `f(k, i, j)`; only the upper
    /// triangle `i <= j` is queried and mirrored.
    pub fn from_fn(
        dim: usize,
        k_classes: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let blocks = (0..k_classes)
            .map(|k| {
                let mut b = DMatrix::zeros(dim, dim);
                for i in 0..dim {
                    for j in i..dim {
                        let v = f(k, i, j);
                        b[(i, j)] = v;
                        b[(j, i)] = v;
                    }
                }
                b
            })
            .collect();
        PrecisionEnsemble { dim, blocks }
    }

    /// `p`, the side length of every block.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K`, the number of blocks.
    pub fn k_classes(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<DMatrix<f64>> {
        self.blocks
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.blocks[k][(i, j)]
    }

    /// Writes `value` at `(i, j)` and `(j, i)` of block `k`.
    pub fn set_sym(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.blocks[k][(i, j)] = value;
        self.blocks[k][(j, i)] = value;
    }

    /// The group `X_[ij] = (X^(1)_ij, ..., X^(K)_ij)` (zero-based indices).
    pub fn group_view(&self, i: usize, j: usize) -> Result<DVector<f64>> {
        if i >= self.dim || j >= self.dim {
            return Err(GglError::InvalidArgument(format!(
                "group index ({i}, {j}) out of range for p = {}",
                self.dim
            )));
        }
        Ok(DVector::from_iterator(
            self.k_classes(),
            self.blocks.iter().map(|b| b[(i, j)]),
        ))
    }

    pub(crate) fn gather(&self, i: usize, j: usize, buf: &mut [f64]) {
        for (slot, b) in buf.iter_mut().zip(&self.blocks) {
            *slot = b[(i, j)];
        }
    }

    pub(crate) fn scatter_sym(&mut self, i: usize, j: usize, buf: &[f64]) {
        for (&v, b) in buf.iter().zip(self.blocks.iter_mut()) {
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }

    pub fn same_shape(&self, other: &PrecisionEnsemble) -> bool {
        self.dim == other.dim && self.k_classes() == other.k_classes()
    }

    pub(crate) fn check_shape(&self, other: &PrecisionEnsemble) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(GglError::ShapeMismatch {
                expected: format!("p={}, K={}", self.dim, self.k_classes()),
                got: format!("p={}, K={}", other.dim, other.k_classes()),
            })
        }
    }

    /// Frobenius inner product summed over blocks.
    pub fn inner(&self, other: &PrecisionEnsemble) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.dot(other))
    }

    pub(crate) fn dot(&self, other: &PrecisionEnsemble) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Largest absolute entry over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &PrecisionEnsemble) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale_mut(&mut self, alpha: f64) {
        for b in &mut self.blocks {
            *b *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> PrecisionEnsemble {
        let mut out = self.clone();
        out.scale_mut(alpha);
        out
    }

    /// Applies `f` to every block, keeping the result's symmetry the caller's
    /// responsibility.
    pub(crate) fn map_blocks(&self, f: impl Fn(usize, &DMatrix<f64>) -> DMatrix<f64>) -> Self {
        PrecisionEnsemble {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| f(k, b))
                .collect(),
        }
    }

    /// `self` restricted to its diagonal entries.
    pub fn diagonal_part(&self) -> PrecisionEnsemble {
        self.map_blocks(|_, b| DMatrix::from_diagonal(&b.diagonal()))
    }
}

impl Add for &PrecisionEnsemble {
    type Output = PrecisionEnsemble;
    fn add(self, rhs: &PrecisionEnsemble) -> PrecisionEnsemble {
        assert!(self.same_shape(rhs), "ensemble shape mismatch");
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &PrecisionEnsemble {
    type Output = PrecisionEnsemble;
    fn sub(self, rhs: &PrecisionEnsemble) -> PrecisionEnsemble {
        assert!(self.same_shape(rhs), "ensemble shape mismatch");
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &PrecisionEnsemble {
    type Output = PrecisionEnsemble;
    fn mul(self, rhs: f64) -> PrecisionEnsemble {
        self.scaled(rhs)
    }
}

impl Neg for &PrecisionEnsemble {
    type Output = PrecisionEnsemble;
    fn neg(self) -> PrecisionEnsemble {
        self.scaled(-1.0)
    }
}

/// Penalty weights of the group graphical Lasso regularizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GglParams {
    /// Element-wise l1 weight.
    pub lambda1: f64,
    /// Group l2 weight.
    pub lambda2: f64,
}

impl GglParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 < 0.0 || lambda2 < 0.0 {
            return Err(GglError::InvalidArgument(format!(
                "penalty weights must be finite and nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(GglParams { lambda1, lambda2 })
    }

    pub fn unpenalized() -> Self {
        GglParams {
            lambda1: 0.0,
            lambda2: 0.0,
        }
    }

    pub fn is_unpenalized(&self) -> bool {
        self.lambda1 == 0.0 && self.lambda2 == 0.0
    }
}

/// Sample covariances `S^(k)` and the sample counts they came from.
#[derive(Clone, Debug)]
pub struct ProblemData {
    covariances: PrecisionEnsemble,
    sample_counts: Vec<usize>,
}

impl ProblemData {
    /// Validates symmetry and positive semidefiniteness of every covariance.
    pub fn new(covariances: Vec<DMatrix<f64>>, sample_counts: Vec<usize>) -> Result<Self> {
        let covariances = PrecisionEnsemble::new(covariances)?;
        if sample_counts.len() != covariances.k_classes() {
            return Err(GglError::ShapeMismatch {
                expected: format!("{} sample counts", covariances.k_classes()),
                got: format!("{}", sample_counts.len()),
            });
        }
        if sample_counts.contains(&0) {
            return Err(GglError::InvalidArgument(
                "sample counts must be positive".into(),
            ));
        }
        for (k, s) in covariances.blocks().iter().enumerate() {
            let scale = s.norm().max(f64::MIN_POSITIVE);
            let min_eig = s.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-10 * scale {
                return Err(GglError::Validation(format!(
                    "covariance {k} is not positive semidefinite (smallest eigenvalue {min_eig:.3e})"
                )));
            }
        }
        Ok(ProblemData {
            covariances,
            sample_counts,
        })
    }

    /// Convenience constructor for covariances of unknown provenance: every
    /// class gets a sample count of one.
    pub fn from_covariances(covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = covariances.len();
        Self::new(covariances, vec![1; k])
    }

    pub fn covariances(&self) -> &PrecisionEnsemble {
        &self.covariances
    }

    pub fn covariance(&self, k: usize) -> &DMatrix<f64> {
        self.covariances.block(k)
    }

    pub fn sample_counts(&self) -> &[usize] {
        &self.sample_counts
    }

    pub fn dim(&self) -> usize {
        self.covariances.dim()
    }

    pub fn k_classes(&self) -> usize {
        self.covariances.k_classes()
    }
}

pub(crate) fn max_relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            let rel = (x - y).abs() / (1.0 + x.abs().max(y.abs()));
            worst = worst.max(rel);
        }
    }
    worst
}

pub(crate) fn symmetrize_in_place(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
}
