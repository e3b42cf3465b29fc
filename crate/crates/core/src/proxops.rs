//! Proximal maps of the group graphical Lasso penalty and their generalized
//! Jacobians.
//!
//! The penalty acts on each cross-class group `x = X_[ij]` (with `i != j`)
//! through the sparse-group-Lasso function `lambda1 ||x||_1 + lambda2 ||x||_2`.
//! Its proximal map is soft-thresholding followed by the group shrinkage
//! `v -> v - Proj_{||.|| <= lambda2}(v)`, and the chain rule on those two
//! pieces gives a cheap, structured element of the generalized Jacobian.
//! Most groups are thresholded to zero at useful penalty levels, so the
//! Jacobian is stored sparsely.

use nalgebra::DMatrix;

use crate::ensemble::{GglParams, PrecisionEnsemble};
use crate::error::{GglError, Result};

fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GglError::InvalidArgument(format!(
            "{name} must be finite and nonnegative, got {value}"
        )))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Component-wise `sign(u_i) max(|u_i| - t, 0)`.
pub fn soft_threshold(u: &[f64], t: f64) -> Result<Vec<f64>> {
    check_nonneg("threshold", t)?;
    Ok(u.iter().map(|&x| shrink(x, t)).collect())
}

#[inline]
fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Euclidean projection onto the ball of radius `r` centred at the origin.
pub fn project_ball(v: &[f64], r: f64) -> Result<Vec<f64>> {
    check_nonneg("radius", r)?;
    let n = norm2(v);
    if n <= r {
        Ok(v.to_vec())
    } else {
        let s = r / n;
        Ok(v.iter().map(|x| x * s).collect())
    }
}

/// Proximal map of `lambda1 ||x||_1 + lambda2 ||x||_2`.
pub fn prox_sgl(u: &[f64], lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    check_nonneg("lambda1", lambda1)?;
    check_nonneg("lambda2", lambda2)?;
    let mut out = u.to_vec();
    prox_sgl_in_place(&mut out, lambda1, lambda2);
    Ok(out)
}

/// In-place [`prox_sgl`] for validated weights.
pub(crate) fn prox_sgl_in_place(x: &mut [f64], lambda1: f64, lambda2: f64) {
    for v in x.iter_mut() {
        *v = shrink(*v, lambda1);
    }
    if lambda2 > 0.0 {
        let n = norm2(x);
        if n <= lambda2 {
            x.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let c = 1.0 - lambda2 / n;
            x.iter_mut().for_each(|v| *v *= c);
        }
    }
}

/// `lambda1 ||x||_1 + lambda2 ||x||_2`.
pub fn sgl_value(x: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    lambda1 * l1 + lambda2 * norm2(x)
}

/// A generalized Jacobian of [`prox_sgl`] at one group, in factored form.
///
/// The realized `K x K` matrix is `c * Lambda + (1 - c) * w w^T`, where
/// `Lambda` is the 0/1 diagonal of coordinates surviving soft-thresholding
/// and `w` is a unit vector supported on those coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupJacobian {
    /// The group is mapped to zero in a neighborhood; the Jacobian vanishes.
    Zero,
    /// `c * Lambda` (no group shrinkage active).
    DiagScaled { mask: Vec<bool>, scale: f64 },
    /// `c * Lambda + (1 - c) * w w^T`.
    Rank1Corrected {
        mask: Vec<bool>,
        scale: f64,
        w: Vec<f64>,
    },
}

impl GroupJacobian {
    pub fn is_zero(&self) -> bool {
        matches!(self, GroupJacobian::Zero)
    }

    /// Writes `M y` into `out` (both of length `K`).
    pub fn apply_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            GroupJacobian::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            GroupJacobian::DiagScaled { mask, scale } => {
                for ((o, &yi), &m) in out.iter_mut().zip(y).zip(mask) {
                    *o = if m { scale * yi } else { 0.0 };
                }
            }
            GroupJacobian::Rank1Corrected { mask, scale, w } => {
                let wy: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
                let r = (1.0 - scale) * wy;
                for (((o, &yi), &m), &wi) in out.iter_mut().zip(y).zip(mask).zip(w) {
                    *o = if m { scale * yi + r * wi } else { 0.0 };
                }
            }
        }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.apply_into(y, &mut out);
        out
    }

    /// The realized dense `K x K` matrix.
    pub fn to_dense(&self, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(k, k);
        let mut e = vec![0.0; k];
        let mut col = vec![0.0; k];
        for j in 0..k {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        m
    }
}

/// Generalized Jacobian of [`prox_sgl`] at `u`.
///
/// At kinks the selection is the sparsest valid one: a coordinate with
/// `|u_i| == lambda1` is treated as thresholded, and a soft-thresholded vector
/// with norm exactly `lambda2` as fully shrunk.
pub fn jac_prox_sgl(u: &[f64], lambda1: f64, lambda2: f64) -> Result<GroupJacobian> {
    check_nonneg("lambda1", lambda1)?;
    check_nonneg("lambda2", lambda2)?;
    let mut buf = vec![0.0; u.len()];
    Ok(group_jacobian(u, lambda1, lambda2, &mut buf))
}

pub(crate) fn group_jacobian(
    u: &[f64],
    lambda1: f64,
    lambda2: f64,
    buf: &mut [f64],
) -> GroupJacobian {
    let mut any = false;
    for (b, &x) in buf.iter_mut().zip(u) {
        *b = shrink(x, lambda1);
        any |= x.abs() > lambda1;
    }
    if !any {
        return GroupJacobian::Zero;
    }
    let mask: Vec<bool> = u.iter().map(|x| x.abs() > lambda1).collect();
    if lambda2 == 0.0 {
        return GroupJacobian::DiagScaled { mask, scale: 1.0 };
    }
    let n = norm2(buf);
    if n <= lambda2 {
        return GroupJacobian::Zero;
    }
    let scale = 1.0 - lambda2 / n;
    let w = buf.iter().map(|v| v / n).collect();
    GroupJacobian::Rank1Corrected { mask, scale, w }
}

/// Proximal map of `sigma * P` on an ensemble: off-diagonal groups go through
/// [`prox_sgl`] with weights `(sigma lambda1, sigma lambda2)`, diagonal groups
/// are copied.
pub fn prox_ggl(
    x: &PrecisionEnsemble,
    params: &GglParams,
    sigma: f64,
) -> Result<PrecisionEnsemble> {
    check_scale(sigma)?;
    Ok(prox_ggl_unchecked(x, params, sigma))
}

pub(crate) fn prox_ggl_unchecked(
    x: &PrecisionEnsemble,
    params: &GglParams,
    sigma: f64,
) -> PrecisionEnsemble {
    if params.is_unpenalized() {
        return x.clone();
    }
    let (l1, l2) = (sigma * params.lambda1, sigma * params.lambda2);
    let p = x.dim();
    let mut out = x.clone();
    let mut buf = vec![0.0; x.k_classes()];
    for i in 0..p {
        for j in (i + 1)..p {
            x.gather(i, j, &mut buf);
            prox_sgl_in_place(&mut buf, l1, l2);
            out.scatter_sym(i, j, &buf);
        }
    }
    out
}

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(GglError::InvalidArgument(format!(
            "prox scale must be positive and finite, got {sigma}"
        )))
    }
}

/// The penalty `P(X) = sum_{i != j} (lambda1 ||X_[ij]||_1 + lambda2 ||X_[ij]||_2)`.
pub fn ggl_penalty(x: &PrecisionEnsemble, params: &GglParams) -> f64 {
    if params.is_unpenalized() {
        return 0.0;
    }
    let p = x.dim();
    let mut buf = vec![0.0; x.k_classes()];
    let mut acc = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            x.gather(i, j, &mut buf);
            acc += sgl_value(&buf, params.lambda1, params.lambda2);
        }
    }
    2.0 * acc
}

/// A generalized Jacobian of [`prox_ggl`] on the whole ensemble. Only groups
/// with a nonzero Jacobian are stored; diagonal groups act as the identity.
#[derive(Clone, Debug)]
pub struct EnsembleJacobian {
    dim: usize,
    k_classes: usize,
    groups: Vec<(usize, usize, GroupJacobian)>,
}

impl EnsembleJacobian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k_classes(&self) -> usize {
        self.k_classes
    }

    /// Stored (nonzero) groups as `(i, j, jacobian)` with `i < j`.
    pub fn groups(&self) -> &[(usize, usize, GroupJacobian)] {
        &self.groups
    }

    /// Number of off-diagonal groups with a nonzero Jacobian.
    pub fn active_groups(&self) -> usize {
        self.groups.len()
    }

    /// The group Jacobian at `(i, j)`; the identity for `i == j`.
    pub fn group(&self, i: usize, j: usize) -> GroupJacobian {
        if i == j {
            return GroupJacobian::DiagScaled {
                mask: vec![true; self.k_classes],
                scale: 1.0,
            };
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.groups
            .iter()
            .find(|(x, y, _)| *x == a && *y == b)
            .map(|(_, _, g)| g.clone())
            .unwrap_or(GroupJacobian::Zero)
    }

    pub(crate) fn apply_unchecked(&self, y: &PrecisionEnsemble) -> PrecisionEnsemble {
        let mut out = y.diagonal_part();
        let mut src = vec![0.0; self.k_classes];
        let mut dst = vec![0.0; self.k_classes];
        for (i, j, g) in &self.groups {
            y.gather(*i, *j, &mut src);
            g.apply_into(&src, &mut dst);
            out.scatter_sym(*i, *j, &dst);
        }
        out
    }
}

/// Generalized Jacobian of `X -> prox_ggl(X, params, sigma)`.
pub fn jac_prox_ggl(
    x: &PrecisionEnsemble,
    params: &GglParams,
    sigma: f64,
) -> Result<EnsembleJacobian> {
    check_scale(sigma)?;
    Ok(jac_prox_ggl_unchecked(x, params, sigma))
}

pub(crate) fn jac_prox_ggl_unchecked(
    x: &PrecisionEnsemble,
    params: &GglParams,
    sigma: f64,
) -> EnsembleJacobian {
    let p = x.dim();
    let k = x.k_classes();
    let (l1, l2) = (sigma * params.lambda1, sigma * params.lambda2);
    let mut u = vec![0.0; k];
    let mut buf = vec![0.0; k];
    let mut groups = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            x.gather(i, j, &mut u);
            let g = group_jacobian(&u, l1, l2, &mut buf);
            if !g.is_zero() {
                groups.push((i, j, g));
            }
        }
    }
    EnsembleJacobian {
        dim: p,
        k_classes: k,
        groups,
    }
}

/// Applies an ensemble Jacobian to a direction.
pub fn jac_apply(jac: &EnsembleJacobian, y: &PrecisionEnsemble) -> Result<PrecisionEnsemble> {
    if y.dim() != jac.dim || y.k_classes() != jac.k_classes {
        return Err(GglError::ShapeMismatch {
            expected: format!("p={}, K={}", jac.dim, jac.k_classes),
            got: format!("p={}, K={}", y.dim(), y.k_classes()),
        });
    }
    Ok(jac.apply_unchecked(y))
}

/// Distance from `u - x` to the subdifferential of the sparse-group-Lasso
/// function at `x`; zero exactly when `x = prox_sgl(u)`.
pub fn sgl_optimality_residual(u: &[f64], x: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let g: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
    let nx = norm2(x);
    if nx > 0.0 {
        // The l2 part is differentiable: subtract its gradient, then the
        // remainder must be an l1 subgradient.
        let mut res = 0.0;
        for (gi, xi) in g.iter().zip(x) {
            let r = gi - lambda2 * xi / nx;
            let d = if *xi != 0.0 {
                r - lambda1 * xi.signum()
            } else {
                (r.abs() - lambda1).max(0.0)
            };
            res += d * d;
        }
        res.sqrt()
    } else {
        // At zero, g must lie in lambda1 [-1, 1]^K + lambda2 B, i.e. the
        // soft-thresholded g must fit in the lambda2 ball.
        let excess = norm2(&g.iter().map(|&v| shrink(v, lambda1)).collect::<Vec<_>>());
        (excess - lambda2).max(0.0)
    }
}
