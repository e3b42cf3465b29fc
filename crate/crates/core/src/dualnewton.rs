//! Semismooth Newton-CG maximization of one proximal point subproblem's dual.
//!
//! The outer proximal point loop freezes anchors `(Omega_t, Theta_t)` and a
//! step `sigma`, and asks for an approximate minimizer of
//!
//! ```text
//!   f(Omega) + P(Theta) + (||Omega - Omega_t||^2 + ||Theta - Theta_t||^2) / (2 sigma)
//!   subject to Omega = Theta.
//! ```
//!
//! Dualizing the coupling constraint with a multiplier `X` gives a smooth,
//! strongly concave function `Upsilon(X)` whose gradient is
//! `phi_plus_sigma(W(X)) - Prox_{sigma P}(V(X))` with
//! `W(X) = Omega_t - sigma (S + X)` and `V(X) = Theta_t + sigma X`. This
//! module maximizes it with Newton directions from conjugate gradients on a
//! generalized Hessian, an Armijo backtracking search, and hands back the
//! primal iterate `Omega = Theta = phi_plus_sigma(W(X))`.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{GglParams, PrecisionEnsemble, ProblemData};
use crate::error::{GglError, Result};
use crate::proxops::{ggl_penalty, jac_prox_ggl_unchecked, prox_ggl_unchecked, EnsembleJacobian};
use crate::spectral::{eig_sym, phi_plus_scalar, EigDecomp, PhiPlusDerivative};

/// CG recomputes its residual from scratch this often.
const CG_RESIDUAL_REFRESH: usize = 25;

/// Knobs of the Newton-CG inner solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// Upper bound on the CG forcing tolerance.
    pub eta_bar: f64,
    /// Forcing exponent: CG stops at `min(eta_bar, ||grad||^(1 + tau))`.
    pub tau: f64,
    /// Armijo sufficient-increase constant.
    pub mu: f64,
    /// Backtracking ratio.
    pub rho: f64,
    pub max_newton_iters: usize,
    pub max_cg_iters: usize,
    pub max_linesearch_steps: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            eta_bar: 0.1,
            tau: 0.2,
            mu: 1e-4,
            rho: 0.5,
            max_newton_iters: 200,
            max_cg_iters: 500,
            max_linesearch_steps: 50,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(GglError::InvalidArgument(format!("Newton config: {what}")));
        if !(self.eta_bar > 0.0 && self.eta_bar < 1.0) {
            return bad("eta_bar must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return bad("mu must lie in (0, 1/2)");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if self.max_newton_iters == 0 || self.max_cg_iters == 0 {
            return bad("iteration caps must be positive");
        }
        Ok(())
    }
}

/// Everything computed from one dual point `X`.
#[derive(Clone, Debug)]
struct Evaluation {
    x: PrecisionEnsemble,
    decomps: Vec<EigDecomp>,
    /// `phi_plus_sigma(W(X))`, block-wise.
    omega: PrecisionEnsemble,
    /// `V(X) = Theta_t + sigma X`.
    v: PrecisionEnsemble,
    /// `Prox_{sigma P}(V(X))`.
    theta: PrecisionEnsemble,
    /// `omega - theta`.
    grad: PrecisionEnsemble,
    grad_norm: f64,
    value: f64,
}

/// The generalized Hessian at one dual point, divided by `-sigma`.
#[derive(Clone, Debug)]
struct ScaledHessian {
    derivs: Vec<PhiPlusDerivative>,
    jac: EnsembleJacobian,
}

impl ScaledHessian {
    /// `(phi_plus)'(W)[D] + J[D]`; positive definite.
    fn apply(&self, d: &PrecisionEnsemble) -> PrecisionEnsemble {
        let mut out = self.jac.apply_unchecked(d);
        let blocks: Vec<_> = self
            .derivs
            .par_iter()
            .zip(d.blocks().par_iter())
            .map(|(deriv, b)| deriv.apply_unchecked(b))
            .collect();
        out.axpy(1.0, &PrecisionEnsemble::from_symmetric(blocks));
        out
    }
}

/// One proximal point subproblem: frozen data plus the current dual iterate
/// and its cached spectral quantities.
#[derive(Clone, Debug)]
pub struct SubproblemState<'a> {
    data: &'a ProblemData,
    params: GglParams,
    omega_t: PrecisionEnsemble,
    theta_t: PrecisionEnsemble,
    sigma: f64,
    current: Evaluation,
    hessian: Option<ScaledHessian>,
    eig_count: Cell<usize>,
}

impl<'a> SubproblemState<'a> {
    pub fn new(
        data: &'a ProblemData,
        params: GglParams,
        omega_t: PrecisionEnsemble,
        theta_t: PrecisionEnsemble,
        sigma: f64,
        x0: PrecisionEnsemble,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GglError::InvalidArgument(format!(
                "proximal step must be positive and finite, got {sigma}"
            )));
        }
        let s = data.covariances();
        s.check_shape(&omega_t)?;
        s.check_shape(&theta_t)?;
        s.check_shape(&x0)?;
        let mut state = SubproblemState {
            data,
            params,
            omega_t,
            theta_t,
            sigma,
            current: placeholder_evaluation(&x0),
            hessian: None,
            eig_count: Cell::new(0),
        };
        state.current = state.evaluate(x0)?;
        Ok(state)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn params(&self) -> &GglParams {
        &self.params
    }

    pub fn data(&self) -> &ProblemData {
        self.data
    }

    pub fn omega_anchor(&self) -> &PrecisionEnsemble {
        &self.omega_t
    }

    pub fn theta_anchor(&self) -> &PrecisionEnsemble {
        &self.theta_t
    }

    /// The current dual iterate.
    pub fn x(&self) -> &PrecisionEnsemble {
        &self.current.x
    }

    /// `Upsilon` at the current iterate.
    pub fn value(&self) -> f64 {
        self.current.value
    }

    /// `grad Upsilon` at the current iterate.
    pub fn gradient(&self) -> &PrecisionEnsemble {
        &self.current.grad
    }

    pub fn gradient_norm(&self) -> f64 {
        self.current.grad_norm
    }

    /// `phi_plus_sigma(W(X))` at the current iterate.
    pub fn omega(&self) -> &PrecisionEnsemble {
        &self.current.omega
    }

    /// `Prox_{sigma P}(V(X))` at the current iterate.
    pub fn theta_prox(&self) -> &PrecisionEnsemble {
        &self.current.theta
    }

    /// Total eigendecompositions performed so far.
    pub fn eig_count(&self) -> usize {
        self.eig_count.get()
    }

    /// Moves the dual iterate, refreshing every cache.
    pub fn set_x(&mut self, x: PrecisionEnsemble) -> Result<()> {
        self.data.covariances().check_shape(&x)?;
        self.current = self.evaluate(x)?;
        self.hessian = None;
        Ok(())
    }

    fn adopt(&mut self, eval: Evaluation) {
        self.current = eval;
        self.hessian = None;
    }

    fn evaluate(&self, x: PrecisionEnsemble) -> Result<Evaluation> {
        let sigma = self.sigma;
        let s = self.data.covariances();
        let omega_t = &self.omega_t;
        let xr = &x;
        // Omega part: sum_i [-ln f_i + 1 - f_i^2 / (2 sigma)] + ||Omega_t||^2 / (2 sigma)
        // with f_i = phi_plus(d_i), using f_i (f_i - d_i) = sigma.
        let pieces: Vec<Result<(EigDecomp, nalgebra::DMatrix<f64>, f64)>> = (0..x.k_classes())
            .into_par_iter()
            .map(|k| {
                let w = omega_t.block(k) - (s.block(k) + xr.block(k)) * sigma;
                let decomp = eig_sym(&w).map_err(|_| {
                    GglError::NonFinite(format!("dual evaluation (block {k}, sigma {sigma:.3e})"))
                })?;
                let part: f64 = decomp
                    .d
                    .iter()
                    .map(|&d| {
                        let f = phi_plus_scalar(sigma, d);
                        -f.ln() + 1.0 - f * f / (2.0 * sigma)
                    })
                    .sum();
                let omega = decomp.reconstruct_with(|d| phi_plus_scalar(sigma, d));
                Ok((decomp, omega, part))
            })
            .collect();
        self.eig_count.set(self.eig_count.get() + x.k_classes());
        let mut decomps = Vec::with_capacity(pieces.len());
        let mut omegas = Vec::with_capacity(pieces.len());
        let mut value = self.omega_t.norm_squared() / (2.0 * sigma);
        for piece in pieces {
            let (d, o, part) = piece?;
            decomps.push(d);
            omegas.push(o);
            value += part;
        }
        let omega = PrecisionEnsemble::from_symmetric(omegas);
        let mut v = self.theta_t.clone();
        v.axpy(sigma, &x);
        let theta = prox_ggl_unchecked(&v, &self.params, sigma);
        // Theta part: P(theta) - <X, theta> + ||theta - Theta_t||^2 / (2 sigma),
        // the value of the inner minimization over Theta at its minimizer.
        value += ggl_penalty(&theta, &self.params) - x.dot(&theta)
            + (&theta - &self.theta_t).norm_squared() / (2.0 * sigma);
        let grad = &omega - &theta;
        let grad_norm = grad.norm();
        if !value.is_finite() || !grad_norm.is_finite() {
            return Err(GglError::NonFinite(format!(
                "dual evaluation (sigma {sigma:.3e})"
            )));
        }
        Ok(Evaluation {
            x,
            decomps,
            omega,
            v,
            theta,
            grad,
            grad_norm,
            value,
        })
    }

    /// `Upsilon(X)` at an arbitrary point (the current iterate is untouched).
    pub fn dual_objective(&self, x: &PrecisionEnsemble) -> Result<f64> {
        self.data.covariances().check_shape(x)?;
        Ok(self.evaluate(x.clone())?.value)
    }

    /// `grad Upsilon(X)` at an arbitrary point.
    pub fn dual_gradient(&self, x: &PrecisionEnsemble) -> Result<PrecisionEnsemble> {
        self.data.covariances().check_shape(x)?;
        Ok(self.evaluate(x.clone())?.grad)
    }

    fn scaled_hessian(&mut self) -> Result<&ScaledHessian> {
        if self.hessian.is_none() {
            let sigma = self.sigma;
            let derivs = self
                .current
                .decomps
                .iter()
                .map(|d| PhiPlusDerivative::new(sigma, d))
                .collect::<Result<Vec<_>>>()?;
            let jac = jac_prox_ggl_unchecked(&self.current.v, &self.params, sigma);
            self.hessian = Some(ScaledHessian { derivs, jac });
        }
        self.hessian
            .as_ref()
            .ok_or_else(|| GglError::Internal("Hessian cache unavailable".into()))
    }

    /// The generalized Hessian `V[D] = -sigma (phi_plus)'(W)[D] - sigma J[D]`
    /// at the current iterate.
    pub fn hessian_apply(&mut self, d: &PrecisionEnsemble) -> Result<PrecisionEnsemble> {
        self.data.covariances().check_shape(d)?;
        let sigma = self.sigma;
        Ok(self.scaled_hessian()?.apply(d).scaled(-sigma))
    }

    /// Number of off-diagonal groups with a nonzero prox Jacobian at the
    /// current iterate.
    pub fn active_groups(&mut self) -> Result<usize> {
        Ok(self.scaled_hessian()?.jac.active_groups())
    }

    /// Approximately solves `(-V) D = grad` by conjugate gradients from zero.
    pub fn newton_direction(
        &mut self,
        grad: &PrecisionEnsemble,
        config: &NewtonConfig,
    ) -> Result<NewtonDirection> {
        self.data.covariances().check_shape(grad)?;
        let gnorm = grad.norm();
        let tolerance = config.eta_bar.min(gnorm.powf(1.0 + config.tau));
        let sigma = self.sigma;
        let dim = grad.dim();
        let k = grad.k_classes();
        if gnorm == 0.0 {
            return Ok(NewtonDirection {
                direction: PrecisionEnsemble::zeros(dim, k),
                cg_iters: 0,
                residual: 0.0,
                tolerance,
                capped: false,
            });
        }
        let op = self.scaled_hessian()?;
        // Solve the sigma-scaled system  A D = grad / sigma;  the residual of
        // the original system is sigma times the scaled one.
        let b = grad.scaled(1.0 / sigma);
        let target = tolerance / sigma;
        let mut d = PrecisionEnsemble::zeros(dim, k);
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = r.norm_squared();
        let mut iters = 0;
        let mut residual = rr.sqrt();
        while iters < config.max_cg_iters {
            if residual <= target {
                break;
            }
            let ap = op.apply(&p);
            let pap = p.dot(&ap);
            if !(pap > 0.0) {
                // Loss of positive curvature can only come from roundoff once
                // the residual is tiny; stop with what we have.
                break;
            }
            let alpha = rr / pap;
            d.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            iters += 1;
            let mut rr_new = r.norm_squared();
            if iters % CG_RESIDUAL_REFRESH == 0 || rr_new.sqrt() <= target {
                r = &b - &op.apply(&d);
                rr_new = r.norm_squared();
            }
            residual = rr_new.sqrt();
            let beta = rr_new / rr;
            rr = rr_new;
            let mut next = r.clone();
            next.axpy(beta, &p);
            p = next;
        }
        Ok(NewtonDirection {
            direction: d,
            cg_iters: iters,
            residual: residual * sigma,
            tolerance,
            capped: residual > target,
        })
    }

    /// Armijo backtracking along `d` from the current iterate. On success the
    /// state moves to the accepted point.
    pub fn line_search(
        &mut self,
        d: &PrecisionEnsemble,
        config: &NewtonConfig,
    ) -> Result<LineSearchOutcome> {
        let slope = self.current.grad.dot(d);
        if slope < 0.0 {
            return Err(GglError::LineSearch {
                steps: 0,
                slope,
                grad_norm: self.current.grad_norm,
            });
        }
        if d.norm_squared() == 0.0 {
            return Ok(LineSearchOutcome {
                alpha: 1.0,
                evals: 0,
            });
        }
        let base = self.current.value;
        // Objective values carry roundoff proportional to their magnitude; an
        // increase below that level cannot be resolved and is not demanded.
        let slack = 1e-13 * (1.0 + base.abs());
        let mut alpha = 1.0;
        for m in 0..=config.max_linesearch_steps {
            let mut trial = self.current.x.clone();
            trial.axpy(alpha, d);
            let eval = self.evaluate(trial)?;
            if eval.value >= base + config.mu * alpha * slope - slack {
                self.adopt(eval);
                return Ok(LineSearchOutcome {
                    alpha,
                    evals: m + 1,
                });
            }
            alpha *= config.rho;
        }
        Err(GglError::LineSearch {
            steps: config.max_linesearch_steps,
            slope,
            grad_norm: self.current.grad_norm,
        })
    }

    /// Primal iterate attached to a dual point: `Omega = Theta =
    /// phi_plus_sigma(Omega_t - sigma (S + X))`.
    pub fn recover_primal(
        &self,
        x: &PrecisionEnsemble,
    ) -> Result<(PrecisionEnsemble, PrecisionEnsemble)> {
        self.data.covariances().check_shape(x)?;
        let omega = if x == &self.current.x {
            self.current.omega.clone()
        } else {
            self.evaluate(x.clone())?.omega
        };
        Ok((omega.clone(), omega))
    }

    /// Snapshot of the current iterate for stopping tests.
    fn iterate(&self, newton_iter: usize) -> InnerIterate<'_> {
        let e = &self.current;
        let sigma = self.sigma;
        let phi = primal_value_on_eigs(
            self.data,
            &self.params,
            &e.omega,
            &e.decomps,
            sigma,
            &self.omega_t,
            &self.theta_t,
        );
        // Phi - Upsilon, computed from differences so the large common terms
        // never enter: the metric terms of Omega cancel exactly, leaving a
        // Bregman-type distance between omega and the prox output.
        let residual_sub = (&e.theta - &e.v).scaled(1.0 / sigma);
        let gap = (ggl_penalty(&e.omega, &self.params) - ggl_penalty(&e.theta, &self.params)
            + e.grad.dot(&residual_sub)
            + e.grad.norm_squared() / (2.0 * sigma))
            .max(0.0);
        let step_norm_sq =
            (&e.omega - &self.omega_t).norm_squared() + (&e.omega - &self.theta_t).norm_squared();
        InnerIterate {
            newton_iter,
            omega: &e.omega,
            theta_prox: &e.theta,
            x: &e.x,
            sigma,
            upsilon: e.value,
            phi,
            gap,
            grad_norm: e.grad_norm,
            step_norm: step_norm_sq.sqrt(),
        }
    }

    /// Magnitude below which the gradient cannot be resolved in floating
    /// point at this proximal step.
    fn noise_floor(&self) -> f64 {
        let e = &self.current;
        16.0 * f64::EPSILON
            * (1.0
                + e.omega.norm()
                + e.theta.norm()
                + e.v.norm()
                + self.sigma * self.data.covariances().norm())
    }
}

fn placeholder_evaluation(x: &PrecisionEnsemble) -> Evaluation {
    let z = PrecisionEnsemble::zeros(x.dim(), x.k_classes());
    Evaluation {
        x: x.clone(),
        decomps: Vec::new(),
        omega: z.clone(),
        v: z.clone(),
        theta: z.clone(),
        grad: z,
        grad_norm: f64::INFINITY,
        value: f64::NEG_INFINITY,
    }
}

/// `Phi_sigma(Omega, Omega)` from the eigenvalues of `W`, whose images under
/// `phi_plus` are the eigenvalues of `Omega`.
fn primal_value_on_eigs(
    data: &ProblemData,
    params: &GglParams,
    omega: &PrecisionEnsemble,
    decomps: &[EigDecomp],
    sigma: f64,
    omega_t: &PrecisionEnsemble,
    theta_t: &PrecisionEnsemble,
) -> f64 {
    let logdet: f64 = decomps
        .iter()
        .flat_map(|e| e.d.iter())
        .map(|&d| phi_plus_scalar(sigma, d).ln())
        .sum();
    -logdet
        + data.covariances().dot(omega)
        + ggl_penalty(omega, params)
        + ((omega - omega_t).norm_squared() + (omega - theta_t).norm_squared()) / (2.0 * sigma)
}

/// Result of one CG solve for a Newton direction.
#[derive(Clone, Debug)]
pub struct NewtonDirection {
    pub direction: PrecisionEnsemble,
    pub cg_iters: usize,
    /// Final `||V[D] + grad||`.
    pub residual: f64,
    /// The forcing tolerance `min(eta_bar, ||grad||^(1 + tau))`.
    pub tolerance: f64,
    /// `true` when CG hit its iteration cap before the tolerance.
    pub capped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    /// Objective evaluations spent (zero for a null direction).
    pub evals: usize,
}

/// What a stopping rule gets to see at each inner iterate.
#[derive(Clone, Copy, Debug)]
pub struct InnerIterate<'s> {
    pub newton_iter: usize,
    /// Recovered primal `Omega = Theta`.
    pub omega: &'s PrecisionEnsemble,
    /// `Prox_{sigma P}(V(X))`; agrees with `omega` at the subproblem optimum.
    pub theta_prox: &'s PrecisionEnsemble,
    pub x: &'s PrecisionEnsemble,
    pub sigma: f64,
    /// `Upsilon(X)`.
    pub upsilon: f64,
    /// `Phi_sigma(Omega, Omega)`.
    pub phi: f64,
    /// `Phi - Upsilon`, evaluated without cancellation; always nonnegative.
    pub gap: f64,
    pub grad_norm: f64,
    /// `||(Omega, Theta) - (Omega_t, Theta_t)||`.
    pub step_norm: f64,
}

/// Could the stopping rule be met, or did the solve stall in roundoff?
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerExit {
    /// The stopping rule accepted the iterate.
    Accepted,
    /// The gradient reached the floating-point noise floor before the rule
    /// was satisfied; the iterate is as accurate as the arithmetic allows.
    Stagnated,
}

/// Counters from one subproblem solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubproblemStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub linesearch_evals: usize,
    pub eig_count: usize,
    pub cg_capped: usize,
    /// `||grad Upsilon||` at every inner iterate, including the last.
    pub grad_norms: Vec<f64>,
    /// `Upsilon` at every inner iterate.
    pub values: Vec<f64>,
    pub final_grad_norm: f64,
    pub final_gap: f64,
    pub stagnated: bool,
}

/// Output of [`solve_subproblem`].
#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub omega: PrecisionEnsemble,
    pub theta: PrecisionEnsemble,
    pub x: PrecisionEnsemble,
    /// `Prox_{sigma P}(V(X))` at the returned `X` (exactly sparse).
    pub theta_prox: PrecisionEnsemble,
    pub upsilon: f64,
    pub phi: f64,
    pub gap: f64,
    pub exit: InnerExit,
    pub stats: SubproblemStats,
}

/// Runs Newton-CG from `x0` until `stop` accepts an iterate.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem(
    anchors: (&PrecisionEnsemble, &PrecisionEnsemble),
    sigma: f64,
    data: &ProblemData,
    params: &GglParams,
    x0: PrecisionEnsemble,
    mut stop: impl FnMut(&InnerIterate<'_>) -> bool,
    config: &NewtonConfig,
) -> Result<SubproblemSolution> {
    config.validate()?;
    let mut state = SubproblemState::new(
        data,
        *params,
        anchors.0.clone(),
        anchors.1.clone(),
        sigma,
        x0,
    )?;
    let mut stats = SubproblemStats::default();
    let mut iter = 0;
    loop {
        let it = state.iterate(iter);
        stats.grad_norms.push(it.grad_norm);
        stats.values.push(it.upsilon);
        let (phi, gap, grad_norm) = (it.phi, it.gap, it.grad_norm);
        let accepted = stop(&it);
        let floor = state.noise_floor();
        let stalled = !accepted && grad_norm <= floor;
        if accepted || stalled {
            stats.final_grad_norm = grad_norm;
            stats.final_gap = gap;
            stats.stagnated = stalled;
            stats.eig_count = state.eig_count();
            return Ok(SubproblemSolution {
                omega: state.current.omega.clone(),
                theta: state.current.omega.clone(),
                x: state.current.x.clone(),
                theta_prox: state.current.theta.clone(),
                upsilon: state.current.value,
                phi,
                gap,
                exit: if accepted {
                    InnerExit::Accepted
                } else {
                    InnerExit::Stagnated
                },
                stats,
            });
        }
        if iter >= config.max_newton_iters {
            return Err(GglError::NewtonCap {
                iterations: iter,
                grad_norm,
            });
        }
        let grad = state.current.grad.clone();
        let nd = state.newton_direction(&grad, config)?;
        stats.cg_iters += nd.cg_iters;
        if nd.capped {
            stats.cg_capped += 1;
        }
        let mut direction = nd.direction;
        if direction.dot(&grad) <= 0.0 {
            direction = grad;
        }
        match state.line_search(&direction, config) {
            Ok(ls) => stats.linesearch_evals += ls.evals,
            Err(err) => {
                // A failed search this close to the noise floor means the
                // objective can no longer resolve progress.
                if grad_norm <= 1e3 * floor {
                    stats.final_grad_norm = grad_norm;
                    stats.final_gap = gap;
                    stats.stagnated = true;
                    stats.eig_count = state.eig_count();
                    return Ok(SubproblemSolution {
                        omega: state.current.omega.clone(),
                        theta: state.current.omega.clone(),
                        x: state.current.x.clone(),
                        theta_prox: state.current.theta.clone(),
                        upsilon: state.current.value,
                        phi,
                        gap,
                        exit: InnerExit::Stagnated,
                        stats,
                    });
                }
                return Err(err);
            }
        }
        iter += 1;
        stats.newton_iters = iter;
    }
}
