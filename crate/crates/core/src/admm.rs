//! ADMM on the dual of the group graphical Lasso problem.
//!
//! The dual maximizes `sum_k log det Z^(k) - P*(X)` subject to
//! `Z - X = S`. With multiplier `Theta` (which converges to the primal
//! precision estimate) and penalty `sigma`, one iteration reads
//!
//! ```text
//!   X' = U - Prox_P(U),                 U = Z + Theta / sigma - S
//!   Z' = phi_plus_{1/sigma}(X' - Theta / sigma + S)
//!   Theta' = Theta + tau sigma (Z' - X' - S)
//! ```
//!
//! The `X` step is the proximal map of `P* / sigma`, which by the Moreau
//! identity and positive homogeneity of `P` needs only the unit-scale prox.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{GglParams, PrecisionEnsemble, ProblemData};
use crate::error::{GglError, Result};
use crate::ppdna::primal_objective;
use crate::proxops::prox_ggl_unchecked;
use crate::spectral::{eig_sym, phi_plus_scalar};

/// Residual-balancing rule for the penalty `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SigmaAdaptation {
    pub enabled: bool,
    /// Rebalance when one residual exceeds the other by this factor.
    pub ratio: f64,
    /// Multiplicative change applied to `sigma`.
    pub factor: f64,
    /// Iterations between checks.
    pub period: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for SigmaAdaptation {
    fn default() -> Self {
        SigmaAdaptation {
            enabled: true,
            ratio: 10.0,
            factor: 1.5,
            period: 50,
            sigma_min: 1e-6,
            sigma_max: 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    /// Initial penalty.
    pub sigma: f64,
    /// Dual step length, in `(0, (1 + sqrt 5) / 2)`.
    pub tau: f64,
    /// Stop once the KKT residual is at most this.
    pub tol: f64,
    pub max_iters: usize,
    pub adapt: SigmaAdaptation,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            sigma: 1.0,
            tau: 1.618,
            tol: 1e-6,
            max_iters: 20_000,
            adapt: SigmaAdaptation::default(),
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(GglError::InvalidArgument(format!("ADMM config: {what}")));
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if !(self.tau > 0.0 && self.tau < golden) {
            return bad("tau must lie in (0, (1 + sqrt 5) / 2)");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be nonnegative");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        let a = &self.adapt;
        if a.enabled
            && (a.period == 0
                || a.ratio <= 1.0
                || a.factor <= 1.0
                || a.sigma_min <= 0.0
                || a.sigma_min > a.sigma_max)
        {
            return bad("invalid sigma adaptation");
        }
        Ok(())
    }
}

/// ADMM iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub x: PrecisionEnsemble,
    pub z: PrecisionEnsemble,
    pub theta: PrecisionEnsemble,
    pub sigma: f64,
}

impl AdmmState {
    /// `X = 0`, `Z = Theta = I`.
    pub fn identity_start(dim: usize, k_classes: usize, sigma: f64) -> Self {
        AdmmState {
            x: PrecisionEnsemble::zeros(dim, k_classes),
            z: PrecisionEnsemble::identity(dim, k_classes),
            theta: PrecisionEnsemble::identity(dim, k_classes),
            sigma,
        }
    }
}

/// One ADMM iteration at fixed `sigma`; returns `(X', Z', Theta')`.
pub fn admm_step(
    state: &AdmmState,
    data: &ProblemData,
    params: &GglParams,
    tau: f64,
) -> Result<(PrecisionEnsemble, PrecisionEnsemble, PrecisionEnsemble)> {
    let s = data.covariances();
    s.check_shape(&state.x)?;
    s.check_shape(&state.z)?;
    s.check_shape(&state.theta)?;
    if !(state.sigma > 0.0) {
        return Err(GglError::InvalidArgument(
            "ADMM penalty must be positive".into(),
        ));
    }
    let sigma = state.sigma;
    let inv = 1.0 / sigma;

    let mut u = &state.z - s;
    u.axpy(inv, &state.theta);
    let x_new = &u - &prox_ggl_unchecked(&u, params, 1.0);

    let blocks = (0..s.k_classes())
        .into_par_iter()
        .map(|k| {
            let arg = x_new.block(k) - state.theta.block(k) * inv + s.block(k);
            Ok(eig_sym(&arg)?.reconstruct_with(|d| phi_plus_scalar(inv, d)))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|_: GglError| GglError::NonFinite("ADMM Z update".into()))?;
    let z_new = PrecisionEnsemble::from_symmetric(blocks);

    let mut theta_new = state.theta.clone();
    let mut resid = &z_new - &x_new;
    resid.axpy(-1.0, s);
    theta_new.axpy(tau * sigma, &resid);
    Ok((x_new, z_new, theta_new))
}

/// KKT residual of the dual problem at `(X, Z, Theta)`:
///
/// `max{ ||Theta - Prox_P(Theta + X)|| / (1 + ||Theta||),
///       ||Z - X - S|| / (1 + ||S||),
///       ||Z - phi_plus_1(Z - Theta)|| / (1 + ||Z||) }`.
pub fn kkt_residual_admm(
    x: &PrecisionEnsemble,
    z: &PrecisionEnsemble,
    theta: &PrecisionEnsemble,
    data: &ProblemData,
    params: &GglParams,
) -> Result<f64> {
    let s = data.covariances();
    s.check_shape(x)?;
    s.check_shape(z)?;
    s.check_shape(theta)?;
    let prox =
        (theta - &prox_ggl_unchecked(&(theta + x), params, 1.0)).norm() / (1.0 + theta.norm());
    let mut feas = z - x;
    feas.axpy(-1.0, s);
    let feas = feas.norm() / (1.0 + s.norm());
    let fixed_sq: f64 = (0..z.k_classes())
        .into_par_iter()
        .map(|k| {
            let arg = z.block(k) - theta.block(k);
            eig_sym(&arg).map(|e| {
                (z.block(k) - e.reconstruct_with(|d| phi_plus_scalar(1.0, d))).norm_squared()
            })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(prox.max(feas).max(fixed_sq.sqrt() / (1.0 + z.norm())))
}

/// One row of the ADMM trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmRecord {
    pub iter: usize,
    pub sigma: f64,
    pub eta_a: f64,
    /// `||Z - X - S||`.
    pub pfeas: f64,
    /// `sigma ||Z - Z_prev||`.
    pub dfeas: f64,
    pub pobj: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmmTrace {
    pub records: Vec<AdmmRecord>,
}

impl AdmmTrace {
    /// CSV with columns `iter,sigma,eta_a,pfeas,dfeas,pobj,wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| GglError::Internal(format!("trace CSV: {e}"));
        w.write_record([
            "iter", "sigma", "eta_a", "pfeas", "dfeas", "pobj", "wall_ms",
        ])
        .map_err(to_err)?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.sigma),
                format!("{:e}", r.eta_a),
                format!("{:e}", r.pfeas),
                format!("{:e}", r.dfeas),
                format!("{:e}", r.pobj),
                format!("{:.3}", r.wall_ms),
            ])
            .map_err(to_err)?;
        }
        w.flush()
            .map_err(|e| GglError::Internal(format!("trace CSV: {e}")))?;
        Ok(())
    }
}

/// Output of an ADMM run. Reaching `max_iters` is a normal outcome, flagged
/// by `converged = false`.
#[derive(Clone, Debug)]
pub struct AdmmSolution {
    pub x: PrecisionEnsemble,
    pub z: PrecisionEnsemble,
    /// Primal precision estimate (the multiplier of `Z - X = S`).
    pub theta: PrecisionEnsemble,
    /// `Prox_P(Theta + X)`: exactly sparse companion of `theta`.
    pub sparse_theta: PrecisionEnsemble,
    pub sigma: f64,
    pub iterations: usize,
    pub eta_a: f64,
    pub converged: bool,
    pub pobj: f64,
    pub trace: AdmmTrace,
}

/// Runs ADMM from the identity start.
pub fn solve_admm(
    data: &ProblemData,
    params: &GglParams,
    config: &AdmmConfig,
) -> Result<AdmmSolution> {
    solve_admm_from(
        data,
        params,
        config,
        AdmmState::identity_start(data.dim(), data.k_classes(), config.sigma),
    )
}

/// Runs ADMM from a given state (its `sigma` overrides `config.sigma`).
pub fn solve_admm_from(
    data: &ProblemData,
    params: &GglParams,
    config: &AdmmConfig,
    start: AdmmState,
) -> Result<AdmmSolution> {
    config.validate()?;
    let clock = Instant::now();
    let s = data.covariances();
    let mut state = start;
    let mut trace = AdmmTrace::default();
    let mut eta = kkt_residual_admm(&state.x, &state.z, &state.theta, data, params)?;
    let mut iterations = 0;
    while eta > config.tol && iterations < config.max_iters {
        let (x, z, theta) = admm_step(&state, data, params, config.tau)?;
        iterations += 1;
        let mut feas = &z - &x;
        feas.axpy(-1.0, s);
        let pfeas = feas.norm();
        let dfeas = state.sigma * (&z - &state.z).norm();
        if !(pfeas.is_finite() && dfeas.is_finite()) {
            return Err(GglError::NonFinite(format!("ADMM iterate {iterations}")));
        }
        state.x = x;
        state.z = z;
        state.theta = theta;
        eta = kkt_residual_admm(&state.x, &state.z, &state.theta, data, params)?;
        trace.records.push(AdmmRecord {
            iter: iterations,
            sigma: state.sigma,
            eta_a: eta,
            pfeas,
            dfeas,
            pobj: primal_objective(&state.theta, data, params),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        let a = &config.adapt;
        if a.enabled && iterations % a.period == 0 {
            if pfeas > a.ratio * dfeas {
                state.sigma = (state.sigma * a.factor).min(a.sigma_max);
            } else if dfeas > a.ratio * pfeas {
                state.sigma = (state.sigma / a.factor).max(a.sigma_min);
            }
        }
    }
    let sparse_theta = prox_ggl_unchecked(&(&state.theta + &state.x), params, 1.0);
    let pobj = primal_objective(&state.theta, data, params);
    Ok(AdmmSolution {
        x: state.x,
        z: state.z,
        theta: state.theta,
        sparse_theta,
        sigma: state.sigma,
        iterations,
        eta_a: eta,
        converged: eta <= config.tol,
        pobj,
        trace,
    })
}
