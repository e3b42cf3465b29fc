//! Spectral operators attached to the log-determinant barrier `h(A) = -log det A`.
//!
//! For a symmetric `A = Q diag(d) Q^T` and `beta > 0`, the proximal map of
//! `beta * h` is the spectral function `phi_plus_beta(A)` with scalar kernel
//! `(sqrt(x^2 + 4 beta) + x) / 2`. Its companion `phi_minus_beta` uses
//! `(sqrt(x^2 + 4 beta) - x) / 2`; the two multiply to `beta I` and differ by
//! `A`. This module also provides the Moreau envelope of `beta * h` and the
//! Fréchet derivative of `phi_plus_beta`, which is a Loewner (divided
//! difference) operator in the eigenbasis of `A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GglError, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    /// Orthogonal matrix whose columns are eigenvectors.
    pub q: DMatrix<f64>,
    /// Eigenvalues, largest first.
    pub d: DVector<f64>,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// `Q diag(f(d_i)) Q^T`, symmetrized exactly.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let values: Vec<f64> = self.d.iter().map(|&x| f(x)).collect();
        spectral_sum(&self.q, &values)
    }

    /// `Q diag(d) Q^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        spectral_sum(&self.q, self.d.as_slice())
    }
}

/// Symmetric eigendecomposition with deterministic (descending) ordering.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<EigDecomp> {
    if !a.is_square() {
        return Err(GglError::InvalidArgument(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(GglError::InvalidArgument(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| GglError::NonFinite(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let (s, u) = (eig.S(), eig.U());
    // faer returns ascending eigenvalues; reverse for descending order.
    let d = DVector::from_fn(n, |i, _| s[n - 1 - i]);
    let q = DMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(EigDecomp { q, d })
}

/// `sqrt(x^2 + 4 beta)` without intermediate overflow.
#[inline]
fn root(beta: f64, x: f64) -> f64 {
    x.hypot(2.0 * beta.sqrt())
}

/// Scalar kernel `(sqrt(x^2 + 4 beta) + x) / 2`, evaluated without
/// cancellation for negative `x`.
#[inline]
pub fn phi_plus_scalar(beta: f64, x: f64) -> f64 {
    let r = root(beta, x);
    if x >= 0.0 {
        0.5 * (r + x)
    } else {
        2.0 * beta / (r - x)
    }
}

/// Scalar kernel `(sqrt(x^2 + 4 beta) - x) / 2`.
#[inline]
pub fn phi_minus_scalar(beta: f64, x: f64) -> f64 {
    phi_plus_scalar(beta, -x)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(GglError::InvalidArgument(format!(
            "spectral parameter must be positive and finite, got {beta}"
        )))
    }
}

/// `phi_plus_beta(A)` from a precomputed decomposition; the proximal map of
/// `beta * h` at `A`. Always positive definite.
pub fn phi_plus(beta: f64, decomp: &EigDecomp) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    Ok(decomp.reconstruct_with(|x| phi_plus_scalar(beta, x)))
}

/// `phi_minus_beta(A)` from a precomputed decomposition.
pub fn phi_minus(beta: f64, decomp: &EigDecomp) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    Ok(decomp.reconstruct_with(|x| phi_minus_scalar(beta, x)))
}

/// Convenience form of [`phi_plus`] that decomposes `a` first.
pub fn phi_plus_matrix(beta: f64, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    phi_plus(beta, &eig_sym(a)?)
}

/// Convenience form of [`phi_minus`] that decomposes `a` first.
pub fn phi_minus_matrix(beta: f64, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    phi_minus(beta, &eig_sym(a)?)
}

/// Moreau envelope of `beta * h` at `A`:
/// `min_B { -beta log det B + ||B - A||^2 / 2 }`.
pub fn moreau_logdet(beta: f64, decomp: &EigDecomp) -> Result<f64> {
    check_beta(beta)?;
    Ok(decomp
        .d
        .iter()
        .map(|&x| {
            let m = phi_minus_scalar(beta, x);
            -beta * phi_plus_scalar(beta, x).ln() + 0.5 * m * m
        })
        .sum())
}

/// The Fréchet derivative of `phi_plus_beta` at a fixed matrix, stored as the
/// eigenbasis and the matrix of first divided differences.
#[derive(Clone, Debug)]
pub struct PhiPlusDerivative {
    q: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl PhiPlusDerivative {
    pub fn new(beta: f64, decomp: &EigDecomp) -> Result<Self> {
        check_beta(beta)?;
        let n = decomp.dim();
        let plus: Vec<f64> = decomp.d.iter().map(|&x| phi_plus_scalar(beta, x)).collect();
        let roots: Vec<f64> = decomp.d.iter().map(|&x| root(beta, x)).collect();
        let gamma = DMatrix::from_fn(n, n, |i, j| (plus[i] + plus[j]) / (roots[i] + roots[j]));
        Ok(PhiPlusDerivative {
            q: decomp.q.clone(),
            gamma,
        })
    }

    /// Divided-difference weights; every entry lies in `(0, 1)`.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Smallest divided-difference weight.
    pub fn gamma_min(&self) -> f64 {
        self.gamma.min()
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `Q (Gamma ∘ (Q^T B Q)) Q^T`.
    pub fn apply(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if b.nrows() != n || b.ncols() != n {
            return Err(GglError::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        Ok(self.apply_unchecked(b))
    }

    pub(crate) fn apply_unchecked(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let inner = self.q.tr_mul(b) * &self.q;
        let weighted = inner.component_mul(&self.gamma);
        let mut out = &self.q * weighted * self.q.transpose();
        crate::ensemble::symmetrize_in_place(&mut out);
        out
    }
}

/// `(phi_plus_beta)'(A)[B]` for a single direction.
pub fn phi_plus_dderiv(beta: f64, decomp: &EigDecomp, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    PhiPlusDerivative::new(beta, decomp)?.apply(b)
}

/// `log det A` for a symmetric positive definite matrix, or `None` when the
/// Cholesky factorization fails.
pub fn log_det_pd(a: &DMatrix<f64>) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        acc += l[(i, i)].ln();
    }
    Some(2.0 * acc)
}

/// `Q diag(values) Q^T` with exact symmetry.
fn spectral_sum(q: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let mut scaled = q.clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(values) {
        col *= v;
    }
    let mut out = scaled * q.transpose();
    crate::ensemble::symmetrize_in_place(&mut out);
    out
}
