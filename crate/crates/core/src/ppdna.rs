//! The proximal point dual Newton algorithm.
//!
//! Each outer iteration applies one inexact proximal point step
//!
//! ```text
//!   (Omega_{t+1}, Theta_{t+1}) ~ argmin  f(Omega) + P(Theta)
//!        + (||Omega - Omega_t||^2 + ||Theta - Theta_t||^2) / (2 sigma_t),  Omega = Theta,
//! ```
//!
//! solved through its dual by [`crate::dualnewton`]. A step is accepted once
//! the subproblem duality gap falls below both `eps_t^2 / (2 sigma_t)` and
//! `gamma_t^2 / (2 sigma_t) * ||step||^2`, with `eps_t`, `gamma_t` shrinking
//! geometrically; the proximal step `sigma_t` grows geometrically up to a cap.
//! The loop ends when the KKT residual of the full problem drops below the
//! target tolerance.

use std::cell::Cell;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::admm::{solve_admm, AdmmConfig};
use crate::dualnewton::{solve_subproblem, InnerExit, NewtonConfig, SubproblemStats};
use crate::ensemble::{GglParams, PrecisionEnsemble, ProblemData};
use crate::error::{GglError, Result};
use crate::proxops::{ggl_penalty, prox_ggl_unchecked, prox_sgl_in_place};
use crate::spectral::{eig_sym, log_det_pd, phi_plus_scalar};

/// Feasibility slack for the dual-ball membership test of `P*`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// ADMM warm start before the first proximal point step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarmStartConfig {
    pub enabled: bool,
    /// ADMM iteration budget.
    pub max_iters: usize,
    /// ADMM stops once its residual is below `tol_factor * epsilon`.
    pub tol_factor: f64,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        WarmStartConfig {
            enabled: true,
            max_iters: 3000,
            tol_factor: 100.0,
        }
    }
}

/// Outer-loop parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpdnaConfig {
    /// Target KKT residual.
    pub epsilon: f64,
    /// Initial proximal step.
    pub sigma0: f64,
    /// Proximal step growth factor per outer iteration; `1` keeps it fixed.
    pub sigma_growth: f64,
    pub sigma_max: f64,
    /// First absolute inexactness level.
    pub eps0: f64,
    /// First relative inexactness level.
    pub gamma0: f64,
    /// Both inexactness levels are divided by this every outer iteration.
    pub schedule_ratio: f64,
    pub max_outer_iters: usize,
    pub warm_start: WarmStartConfig,
    pub newton: NewtonConfig,
}

impl Default for PpdnaConfig {
    fn default() -> Self {
        PpdnaConfig {
            epsilon: 1e-6,
            sigma0: 1.0,
            sigma_growth: 1.3,
            sigma_max: 1e8,
            eps0: 0.5,
            gamma0: 0.5,
            schedule_ratio: 2.0,
            max_outer_iters: 200,
            warm_start: WarmStartConfig::default(),
            newton: NewtonConfig::default(),
        }
    }
}

impl PpdnaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(GglError::InvalidArgument(format!("PPDNA config: {what}")));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.epsilon) {
            return bad("epsilon must be positive");
        }
        if !positive(self.sigma0) || !positive(self.sigma_max) || self.sigma0 > self.sigma_max {
            return bad("need 0 < sigma0 <= sigma_max");
        }
        if !(self.sigma_growth >= 1.0 && self.sigma_growth.is_finite()) {
            return bad("sigma_growth must be at least 1");
        }
        if !positive(self.eps0) {
            return bad("eps0 must be positive");
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return bad("gamma0 must lie in (0, 1)");
        }
        if !(self.schedule_ratio > 1.0 && self.schedule_ratio.is_finite()) {
            return bad("schedule_ratio must exceed 1");
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be positive");
        }
        if self.warm_start.enabled
            && (self.warm_start.max_iters == 0 || !positive(self.warm_start.tol_factor))
        {
            return bad("warm start needs a positive budget and tolerance factor");
        }
        self.newton.validate()
    }
}

/// A primal-dual point `(Omega, Theta, X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub omega: PrecisionEnsemble,
    pub theta: PrecisionEnsemble,
    pub x: PrecisionEnsemble,
}

impl Triple {
    /// `(||dOmega|| + ||dTheta|| + ||dX||) / (||Omega|| + ||Theta|| + ||X||)`
    /// relative to `reference`.
    pub fn relative_distance(&self, reference: &Triple) -> Result<f64> {
        reference.omega.check_shape(&self.omega)?;
        reference.theta.check_shape(&self.theta)?;
        reference.x.check_shape(&self.x)?;
        let num = (&self.omega - &reference.omega).norm()
            + (&self.theta - &reference.theta).norm()
            + (&self.x - &reference.x).norm();
        let den = reference.omega.norm() + reference.theta.norm() + reference.x.norm();
        Ok(if den > 0.0 { num / den } else { num })
    }
}

/// One row of the outer-loop trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub sigma: f64,
    pub eta_p: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub relgap: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// Cumulative wall time since the solve started.
    pub wall_ms: f64,
    /// Subproblem duality gap at the accepted inner iterate.
    pub subproblem_gap: f64,
    /// Relative distance to a reference solution, when one was supplied.
    pub distance: Option<f64>,
}

/// Per-iteration history of a PPDNA solve. Row `0` describes the starting
/// point; row `t` the iterate after `t` proximal point steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// Inner-solver counters per outer iteration.
    pub subproblems: Vec<SubproblemStats>,
    /// ADMM iterations spent on the warm start.
    pub warm_start_iters: usize,
}

impl SolveTrace {
    /// Outer iterations performed (excluding the starting row).
    pub fn outer_iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_newton_iters(&self) -> usize {
        self.records.iter().map(|r| r.newton_iters).sum()
    }

    pub fn total_cg_iters(&self) -> usize {
        self.records.iter().map(|r| r.cg_iters).sum()
    }

    /// The relative-distance series, if a reference was supplied.
    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.distance).collect()
    }

    /// Writes the trace as CSV with columns
    /// `iter,sigma,eta_p,pobj,dobj,relgap,newton_iters,cg_iters,wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| GglError::Internal(format!("trace CSV: {e}"));
        w.write_record([
            "iter",
            "sigma",
            "eta_p",
            "pobj",
            "dobj",
            "relgap",
            "newton_iters",
            "cg_iters",
            "wall_ms",
        ])
        .map_err(to_err)?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.sigma),
                format!("{:e}", r.eta_p),
                format!("{:e}", r.pobj),
                format!("{:e}", r.dobj),
                format!("{:e}", r.relgap),
                r.newton_iters.to_string(),
                r.cg_iters.to_string(),
                format!("{:.3}", r.wall_ms),
            ])
            .map_err(to_err)?;
        }
        w.flush()
            .map_err(|e| GglError::Internal(format!("trace CSV: {e}")))?;
        Ok(())
    }
}

/// Output of a converged PPDNA solve.
#[derive(Clone, Debug)]
pub struct PpdnaSolution {
    pub omega: PrecisionEnsemble,
    pub theta: PrecisionEnsemble,
    pub x: PrecisionEnsemble,
    /// `Prox_P(Theta + X)`: the exactly sparse estimate that agrees with
    /// `theta` up to the KKT residual. Use this for support recovery.
    pub sparse_theta: PrecisionEnsemble,
    pub eta_p: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub relgap: f64,
    pub trace: SolveTrace,
}

impl PpdnaSolution {
    pub fn triple(&self) -> Triple {
        Triple {
            omega: self.omega.clone(),
            theta: self.theta.clone(),
            x: self.x.clone(),
        }
    }
}

/// Which inexactness test of the proximal point step to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Absolute: `gap <= eps_t^2 / (2 sigma_t)`.
    Absolute,
    /// Relative: `gap <= gamma_t^2 / (2 sigma_t) * ||step||^2`.
    Relative,
}

/// Evaluates one inexactness test from the subproblem's primal and dual
/// values.
pub fn check_criterion(
    kind: Criterion,
    phi: f64,
    upsilon: f64,
    step_norm: f64,
    eps_t: f64,
    gamma_t: f64,
    sigma_t: f64,
) -> Result<bool> {
    if phi < upsilon - 1e-9 * (1.0 + upsilon.abs()) {
        return Err(GglError::Internal(format!(
            "subproblem primal value {phi:.6e} below its dual value {upsilon:.6e}"
        )));
    }
    Ok(criterion_holds(
        kind,
        (phi - upsilon).max(0.0),
        step_norm,
        eps_t,
        gamma_t,
        sigma_t,
    ))
}

/// [`check_criterion`] on a precomputed, nonnegative gap.
pub fn criterion_holds(
    kind: Criterion,
    gap: f64,
    step_norm: f64,
    eps_t: f64,
    gamma_t: f64,
    sigma_t: f64,
) -> bool {
    match kind {
        Criterion::Absolute => gap <= eps_t * eps_t / (2.0 * sigma_t),
        Criterion::Relative => gap <= gamma_t * gamma_t / (2.0 * sigma_t) * step_norm * step_norm,
    }
}

/// `f(Omega) = sum_k (-log det Omega^(k) + <S^(k), Omega^(k)>)`, or `+inf`
/// when a block is not positive definite.
pub fn smooth_objective(omega: &PrecisionEnsemble, data: &ProblemData) -> f64 {
    let mut acc = 0.0;
    for (k, b) in omega.blocks().iter().enumerate() {
        match log_det_pd(b) {
            Some(ld) => acc += -ld + data.covariance(k).dot(b),
            None => return f64::INFINITY,
        }
    }
    acc
}

/// The penalized negative log-likelihood `f(Theta) + P(Theta)`; `+inf` off
/// the positive definite cone.
pub fn primal_objective(theta: &PrecisionEnsemble, data: &ProblemData, params: &GglParams) -> f64 {
    smooth_objective(theta, data) + ggl_penalty(theta, params)
}

/// Proximal point objective on the coupling set `Omega = Theta`.
pub fn phi_value(
    omega: &PrecisionEnsemble,
    theta: &PrecisionEnsemble,
    anchors: (&PrecisionEnsemble, &PrecisionEnsemble),
    sigma_t: f64,
    data: &ProblemData,
    params: &GglParams,
) -> Result<f64> {
    data.covariances().check_shape(omega)?;
    omega.check_shape(theta)?;
    omega.check_shape(anchors.0)?;
    omega.check_shape(anchors.1)?;
    if !(sigma_t > 0.0) {
        return Err(GglError::InvalidArgument(
            "proximal step must be positive".into(),
        ));
    }
    let mismatch = (omega - theta).max_abs();
    if mismatch > 1e-12 {
        return Err(GglError::InvalidArgument(format!(
            "phi is only finite on Omega = Theta (max deviation {mismatch:.3e})"
        )));
    }
    let f = smooth_objective(omega, data);
    if !f.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(f + ggl_penalty(theta, params)
        + ((omega - anchors.0).norm_squared() + (theta - anchors.1).norm_squared())
            / (2.0 * sigma_t))
}

/// KKT residual of the full problem at `(Omega, Theta, X)`:
///
/// `max{ ||Theta - Prox_P(Theta + X)|| / (1 + ||Theta||),
///       ||Theta - Omega|| / (1 + ||Theta||),
///       ||Omega - phi_plus_1(Omega - S - X)|| / (1 + ||Omega||) }`.
pub fn kkt_residual_primal(
    omega: &PrecisionEnsemble,
    theta: &PrecisionEnsemble,
    x: &PrecisionEnsemble,
    data: &ProblemData,
    params: &GglParams,
) -> Result<f64> {
    let s = data.covariances();
    s.check_shape(omega)?;
    s.check_shape(theta)?;
    s.check_shape(x)?;
    let nt = 1.0 + theta.norm();
    let no = 1.0 + omega.norm();
    let prox_res = (theta - &prox_ggl_unchecked(&(theta + x), params, 1.0)).norm() / nt;
    let coupling = (theta - omega).norm() / nt;
    let mut fixed_sq = 0.0;
    for k in 0..omega.k_classes() {
        let arg = omega.block(k) - s.block(k) - x.block(k);
        let image = eig_sym(&arg)?.reconstruct_with(|d| phi_plus_scalar(1.0, d));
        fixed_sq += (omega.block(k) - image).norm_squared();
    }
    Ok(prox_res.max(coupling).max(fixed_sq.sqrt() / no))
}

/// `true` when `X` lies in the domain of `P*`: zero diagonal groups and every
/// off-diagonal group in the dual ball of the sparse-group-Lasso norm.
pub fn dual_feasible(x: &PrecisionEnsemble, params: &GglParams) -> bool {
    let p = x.dim();
    let mut buf = vec![0.0; x.k_classes()];
    for i in 0..p {
        x.gather(i, i, &mut buf);
        if buf.iter().any(|&v| v != 0.0) {
            return false;
        }
        for j in (i + 1)..p {
            x.gather(i, j, &mut buf);
            prox_sgl_in_place(&mut buf, params.lambda1, params.lambda2);
            if buf.iter().map(|v| v * v).sum::<f64>().sqrt() > DUAL_FEASIBILITY_TOL {
                return false;
            }
        }
    }
    true
}

/// Dual objective `sum_k (log det(X^(k) + S^(k)) + p) - P*(X)`; `-inf` when
/// `X` is outside the domain of `P*` or some `X^(k) + S^(k)` is not positive
/// definite.
pub fn dual_objective_global(
    x: &PrecisionEnsemble,
    data: &ProblemData,
    params: &GglParams,
) -> Result<f64> {
    data.covariances().check_shape(x)?;
    if !dual_feasible(x, params) {
        return Ok(f64::NEG_INFINITY);
    }
    let p = x.dim() as f64;
    let mut acc = 0.0;
    for k in 0..x.k_classes() {
        match log_det_pd(&(x.block(k) + data.covariance(k))) {
            Some(ld) => acc += ld + p,
            None => return Ok(f64::NEG_INFINITY),
        }
    }
    Ok(acc)
}

/// Nearest point of the domain of `P*`: diagonal groups zeroed, off-diagonal
/// groups projected onto the dual ball.
pub fn project_dual_feasible(x: &PrecisionEnsemble, params: &GglParams) -> PrecisionEnsemble {
    let p = x.dim();
    let mut out = x.clone();
    let mut buf = vec![0.0; x.k_classes()];
    let mut proj = vec![0.0; x.k_classes()];
    for i in 0..p {
        out.scatter_sym(i, i, &vec![0.0; x.k_classes()]);
        for j in (i + 1)..p {
            x.gather(i, j, &mut buf);
            proj.copy_from_slice(&buf);
            prox_sgl_in_place(&mut proj, params.lambda1, params.lambda2);
            for (b, q) in buf.iter_mut().zip(&proj) {
                *b -= q;
            }
            out.scatter_sym(i, j, &buf);
        }
    }
    out
}

/// `(pobj, dobj, relgap)` at `(Theta, X)`; the dual value is taken at the
/// projection of `X` onto the domain of `P*`.
pub fn objective_summary(
    theta: &PrecisionEnsemble,
    x: &PrecisionEnsemble,
    data: &ProblemData,
    params: &GglParams,
) -> (f64, f64, f64) {
    let pobj = primal_objective(theta, data, params);
    let xf = project_dual_feasible(x, params);
    let dobj = dual_objective_global(&xf, data, params).unwrap_or(f64::NEG_INFINITY);
    (pobj, dobj, relative_gap(pobj, dobj))
}

/// `|pobj - dobj| / (1 + |pobj| + |dobj|)`; infinite if either is.
pub fn relative_gap(pobj: f64, dobj: f64) -> f64 {
    if pobj.is_finite() && dobj.is_finite() {
        (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs())
    } else {
        f64::INFINITY
    }
}

/// Starting triple for the proximal point loop, with the ADMM work spent.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub triple: Triple,
    pub admm_iters: usize,
    pub admm_eta: f64,
}

/// ADMM warm start, mapped into the proximal point variables: `X` is the
/// ADMM dual variable and `Omega = Theta = phi_plus_1(Theta_admm - S - X)`,
/// which equals the ADMM multiplier at a KKT point and is always positive
/// definite. Disabled, it returns identities and a zero multiplier.
pub fn warm_start(
    data: &ProblemData,
    params: &GglParams,
    config: &WarmStartConfig,
    epsilon: f64,
) -> Result<WarmStart> {
    let (p, k) = (data.dim(), data.k_classes());
    if !config.enabled {
        return Ok(WarmStart {
            triple: Triple {
                omega: PrecisionEnsemble::identity(p, k),
                theta: PrecisionEnsemble::identity(p, k),
                x: PrecisionEnsemble::zeros(p, k),
            },
            admm_iters: 0,
            admm_eta: f64::NAN,
        });
    }
    let admm_cfg = AdmmConfig {
        tol: config.tol_factor * epsilon,
        max_iters: config.max_iters,
        ..AdmmConfig::default()
    };
    let run = solve_admm(data, params, &admm_cfg)?;
    let s = data.covariances();
    let blocks = (0..k)
        .map(|c| {
            let arg = run.theta.block(c) - s.block(c) - run.x.block(c);
            Ok(eig_sym(&arg)?.reconstruct_with(|d| phi_plus_scalar(1.0, d)))
        })
        .collect::<Result<Vec<_>>>()?;
    let omega = PrecisionEnsemble::from_symmetric(blocks);
    Ok(WarmStart {
        triple: Triple {
            theta: omega.clone(),
            omega,
            x: run.x,
        },
        admm_iters: run.iterations,
        admm_eta: run.eta_a,
    })
}

/// Solves the group graphical Lasso problem to KKT residual `config.epsilon`.
pub fn solve(
    data: &ProblemData,
    params: &GglParams,
    config: &PpdnaConfig,
) -> Result<PpdnaSolution> {
    run(data, params, config, None, None)
}

/// Like [`solve`], additionally recording the relative distance of every
/// iterate to `reference`.
pub fn solve_with_reference(
    data: &ProblemData,
    params: &GglParams,
    config: &PpdnaConfig,
    reference: &Triple,
) -> Result<PpdnaSolution> {
    run(data, params, config, Some(reference), None)
}

/// Like [`solve`] but starting from a given triple (no warm start).
pub fn solve_from(
    data: &ProblemData,
    params: &GglParams,
    config: &PpdnaConfig,
    start: Triple,
    reference: Option<&Triple>,
) -> Result<PpdnaSolution> {
    run(data, params, config, reference, Some(start))
}

fn run(
    data: &ProblemData,
    params: &GglParams,
    config: &PpdnaConfig,
    reference: Option<&Triple>,
    start: Option<Triple>,
) -> Result<PpdnaSolution> {
    config.validate()?;
    let clock = Instant::now();
    let elapsed_ms = || clock.elapsed().as_secs_f64() * 1e3;
    let mut trace = SolveTrace::default();
    let mut current = match start {
        Some(t) => {
            data.covariances().check_shape(&t.omega)?;
            data.covariances().check_shape(&t.theta)?;
            data.covariances().check_shape(&t.x)?;
            t
        }
        None => {
            let ws = warm_start(data, params, &config.warm_start, config.epsilon)?;
            trace.warm_start_iters = ws.admm_iters;
            ws.triple
        }
    };

    let record = |trace: &mut SolveTrace,
                  iter: usize,
                  sigma: f64,
                  t: &Triple,
                  eta_p: f64,
                  sub: Option<&SubproblemStats>,
                  gap: f64|
     -> Result<()> {
        let (pobj, dobj, relgap) = objective_summary(&t.theta, &t.x, data, params);
        let distance = reference.map(|r| t.relative_distance(r)).transpose()?;
        trace.records.push(TraceRecord {
            iter,
            sigma,
            eta_p,
            pobj,
            dobj,
            relgap,
            newton_iters: sub.map_or(0, |s| s.newton_iters),
            cg_iters: sub.map_or(0, |s| s.cg_iters),
            wall_ms: elapsed_ms(),
            subproblem_gap: gap,
            distance,
        });
        Ok(())
    };

    let mut eta_p = kkt_residual_primal(&current.omega, &current.theta, &current.x, data, params)?;
    let mut sigma = config.sigma0;
    record(&mut trace, 0, sigma, &current, eta_p, None, f64::NAN)?;
    let mut eps_t = config.eps0;
    let mut gamma_t = config.gamma0;
    let mut t = 0;
    while eta_p > config.epsilon {
        if t >= config.max_outer_iters {
            return Err(GglError::OuterCap {
                iterations: t,
                eta: eta_p,
                trace: Box::new(trace),
            });
        }
        let inner_eta = Cell::new(f64::NAN);
        let stop = |it: &crate::dualnewton::InnerIterate<'_>| {
            let a = criterion_holds(
                Criterion::Absolute,
                it.gap,
                it.step_norm,
                eps_t,
                gamma_t,
                it.sigma,
            );
            let b = criterion_holds(
                Criterion::Relative,
                it.gap,
                it.step_norm,
                eps_t,
                gamma_t,
                it.sigma,
            );
            if a && b {
                inner_eta.set(f64::NAN);
                return true;
            }
            // The gap tests shrink geometrically and eventually fall below
            // what floating point can certify; an iterate that already
            // solves the full problem is accepted regardless.
            match kkt_residual_primal(it.omega, it.omega, it.x, data, params) {
                Ok(eta) => {
                    inner_eta.set(eta);
                    eta <= config.epsilon
                }
                Err(_) => false,
            }
        };
        let sol = solve_subproblem(
            (&current.omega, &current.theta),
            sigma,
            data,
            params,
            current.x.clone(),
            stop,
            &config.newton,
        )
        .map_err(|e| GglError::Subproblem {
            outer: t + 1,
            reason: e.to_string(),
            trace: Box::new(trace.clone()),
        })?;
        t += 1;
        current = Triple {
            omega: sol.omega,
            theta: sol.theta,
            x: sol.x,
        };
        eta_p = match inner_eta.get() {
            v if v.is_finite() && sol.exit == InnerExit::Accepted => v,
            _ => kkt_residual_primal(&current.omega, &current.theta, &current.x, data, params)?,
        };
        record(
            &mut trace,
            t,
            sigma,
            &current,
            eta_p,
            Some(&sol.stats),
            sol.gap,
        )?;
        trace.subproblems.push(sol.stats);
        sigma = (sigma * config.sigma_growth).min(config.sigma_max);
        eps_t /= config.schedule_ratio;
        gamma_t /= config.schedule_ratio;
    }
    let sparse_theta = prox_ggl_unchecked(&(&current.theta + &current.x), params, 1.0);
    let last = trace
        .records
        .last()
        .cloned()
        .ok_or_else(|| GglError::Internal("empty trace".into()))?;
    Ok(PpdnaSolution {
        omega: current.omega,
        theta: current.theta,
        x: current.x,
        sparse_theta,
        eta_p,
        pobj: last.pobj,
        dobj: last.dobj,
        relgap: last.relgap,
        trace,
    })
}
