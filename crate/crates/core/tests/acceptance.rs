//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line (written straight to stderr so it shows up
//! even when test output is captured) before asserting.
//!
//! Criteria run one at a time so their runtime budgets are not distorted by
//! each other.

use std::io::Write;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ggl::datagen::{
    gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian, GroundTruth,
};
use ggl::dualnewton::SubproblemState;
use ggl::metrics::{edge_report, linear_fit, rate_tail};
use ggl::ppdna::solve_with_reference;
use ggl::proxops::{jac_prox_sgl, prox_sgl};
use ggl::spectral::{eig_sym, phi_minus_matrix, phi_plus_matrix, PhiPlusDerivative};
use ggl::{
    solve, solve_admm, AdmmConfig, GglError, GglParams, NewtonConfig, PpdnaConfig, PpdnaSolution,
    PrecisionEnsemble, ProblemData,
};

static SERIAL: Mutex<()> = Mutex::new(());

/// Outcome of one criterion: pass/fail plus a one-line explanation.
struct Verdict {
    pass: bool,
    detail: String,
}

fn run_criterion(number: usize, budget: Option<Duration>, body: impl FnOnce() -> Verdict) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut verdict = body();
    let elapsed = start.elapsed();
    if let Some(limit) = budget {
        if elapsed > limit {
            verdict.pass = false;
            verdict.detail += &format!(
                "; runtime {:.1} s exceeds {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            );
        }
    }
    let line = format!(
        "criterion {number}: {} ({:.1} s) {}\n",
        if verdict.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        verdict.detail
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(
        verdict.pass,
        "criterion {number} failed: {}",
        verdict.detail
    );
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_sym(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng) * scale);
    (&a + a.transpose()) * 0.5
}

fn random_sym_ensemble(p: usize, k: usize, scale: f64, rng: &mut impl Rng) -> PrecisionEnsemble {
    PrecisionEnsemble::new((0..k).map(|_| random_sym(p, scale, rng)).collect()).unwrap()
}

/// Benchmark instance: nearest-neighbor network with `n = 10_000`
/// observations per class.
fn benchmark(p: usize, seed: u64) -> (ProblemData, GroundTruth) {
    let truth = gen_nn_network(p, 3, 5, 4, seed).unwrap();
    let samples = sample_gaussian(&truth, 10_000, seed).unwrap();
    let covs = samples
        .iter()
        .map(|s| sample_covariance(s).unwrap())
        .collect();
    (ProblemData::new(covs, vec![10_000; 3]).unwrap(), truth)
}

fn standard_params() -> GglParams {
    reparam_to_lambda(0.05, 0.2).unwrap()
}

// ---------------------------------------------------------------- criterion 1

/// Violation of `u - x ∈ ∂(lambda1 ||x||_1 + lambda2 ||x||)`, written from
/// the definition of the subdifferential.
fn subgradient_violation(u: &[f64], x: &[f64], l1: f64, l2: f64) -> f64 {
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if xn == 0.0 {
        // u must lie in lambda1 * B_inf + lambda2 * B_2.
        let excess: f64 = u
            .iter()
            .map(|&v| (v.abs() - l1).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        return (excess - l2).max(0.0);
    }
    u.iter()
        .zip(x)
        .map(|(&ui, &xi)| {
            let g = ui - xi - l2 * xi / xn;
            if xi != 0.0 {
                (g - l1 * xi.signum()).abs()
            } else {
                (g.abs() - l1).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Independent numerical minimizer of `lambda1 ||x||_1 + lambda2 ||x|| +
/// 0.5 ||x - u||^2`: Douglas-Rachford splitting between the (separable)
/// `l1 + quadratic` part and the `l2` part, each handled by its own
/// elementary proximal map.
fn sgl_minimizer_numeric(u: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let k = u.len();
    let gamma = 1.0;
    // prox of gamma * (l1 |x|_1 + 0.5 |x - u|^2), coordinate-wise.
    let prox_f = |z: &[f64]| -> Vec<f64> {
        z.iter()
            .zip(u)
            .map(|(&zi, &ui)| {
                let c = (zi + gamma * ui) / (1.0 + gamma);
                let t = gamma * l1 / (1.0 + gamma);
                c.signum() * (c.abs() - t).max(0.0)
            })
            .collect()
    };
    let prox_g = |z: &[f64]| -> Vec<f64> {
        let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = if n > 0.0 {
            (1.0 - gamma * l2 / n).max(0.0)
        } else {
            0.0
        };
        z.iter().map(|v| v * s).collect()
    };
    let mut z = u.to_vec();
    let mut x = prox_f(&z);
    for _ in 0..200_000 {
        x = prox_f(&z);
        let reflected: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 2.0 * a - b).collect();
        let y = prox_g(&reflected);
        let mut change = 0.0f64;
        for i in 0..k {
            let dz = y[i] - x[i];
            z[i] += dz;
            change = change.max(dz.abs());
        }
        if change < 1e-14 {
            break;
        }
    }
    prox_g(&(0..k).map(|i| 2.0 * x[i] - z[i]).collect::<Vec<_>>())
}

#[test]
fn criterion_01_prox_oracle_equivalence() {
    run_criterion(1, Some(Duration::from_secs(10)), || {
        let mut r = rng(1);
        let lambdas = [0.0, 0.1, 1.0, 10.0];
        let (mut worst_opt, mut worst_num) = (0.0f64, 0.0f64);
        for case in 0..1000 {
            let k = [1, 3, 5][case % 3];
            let l1 = lambdas[(case / 3) % 4];
            let l2 = lambdas[(case / 12) % 4];
            let scale = [0.1, 1.0, 10.0, 30.0][(case / 48) % 4];
            let u: Vec<f64> = (0..k).map(|_| normal(&mut r) * scale).collect();
            let x = prox_sgl(&u, l1, l2).unwrap();
            worst_opt = worst_opt.max(subgradient_violation(&u, &x, l1, l2));
            let numeric = sgl_minimizer_numeric(&u, l1, l2);
            let gap = x
                .iter()
                .zip(&numeric)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_num = worst_num.max(gap);
        }
        Verdict {
            pass: worst_opt <= 1e-8 && worst_num <= 1e-6,
            detail: format!(
                "1000 cases: max subgradient violation {worst_opt:.2e} (tol 1e-8), max distance to numerical minimizer {worst_num:.2e} (tol 1e-6)"
            ),
        }
    });
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_jacobian_correctness() {
    run_criterion(2, Some(Duration::from_secs(10)), || {
        let mut r = rng(2);
        let margin = 1e-3;
        let h = 1e-6;
        let (mut worst_fd, mut worst_asym, mut min_eig, mut max_eig) =
            (0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        let mut accepted = 0;
        while accepted < 200 {
            let k = [1, 2, 3, 5][accepted % 4];
            let l1 = [0.0, 0.1, 1.0][(accepted / 4) % 3];
            let l2 = [0.0, 0.1, 1.0][(accepted / 12) % 3];
            let u: Vec<f64> = (0..k).map(|_| normal(&mut r) * 2.0).collect();
            // Stay at least `margin` away from both kink sets.
            if l1 > 0.0 && u.iter().any(|v| (v.abs() - l1).abs() < margin) {
                continue;
            }
            let st: f64 = u
                .iter()
                .map(|v| (v.abs() - l1).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            if l2 > 0.0 && (st - l2).abs() < margin {
                continue;
            }
            accepted += 1;
            let jac = jac_prox_sgl(&u, l1, l2).unwrap().to_dense(k);
            let mut fd = DMatrix::zeros(k, k);
            for j in 0..k {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[j] += h;
                dn[j] -= h;
                let (a, b) = (
                    prox_sgl(&up, l1, l2).unwrap(),
                    prox_sgl(&dn, l1, l2).unwrap(),
                );
                for i in 0..k {
                    fd[(i, j)] = (a[i] - b[i]) / (2.0 * h);
                }
            }
            worst_fd = worst_fd.max((&jac - &fd).amax());
            worst_asym = worst_asym.max((&jac - jac.transpose()).amax());
            let eigs = jac.clone().symmetric_eigenvalues();
            min_eig = min_eig.min(eigs.min());
            max_eig = max_eig.max(eigs.max());
        }
        Verdict {
            pass: worst_fd <= 1e-5 && worst_asym <= 1e-12 && min_eig >= -1e-10 && max_eig <= 1.0 + 1e-10,
            detail: format!(
                "200 points: max |J - FD| {worst_fd:.2e} (tol 1e-5), asymmetry {worst_asym:.1e}, eigenvalues in [{min_eig:.2e}, {max_eig:.6}]"
            ),
        }
    });
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_03_spectral_identities() {
    run_criterion(3, Some(Duration::from_secs(30)), || {
        let mut r = rng(3);
        let h = 1e-6;
        let (mut prod, mut diff, mut quad, mut deriv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut pass = true;
        for case in 0..100 {
            let n = 1 + case % 20;
            let a = random_sym(n, [0.1, 1.0, 10.0][case % 3], &mut r);
            let dir = random_sym(n, 1.0, &mut r);
            for beta in [1e-4, 1.0, 1e4] {
                let eye = DMatrix::<f64>::identity(n, n);
                let plus = phi_plus_matrix(beta, &a).unwrap();
                let minus = phi_minus_matrix(beta, &a).unwrap();
                // Relative to the size of the factors: the product of two
                // matrices carries roundoff proportional to |phi+| |phi-|,
                // which exceeds beta by orders of magnitude when |A|^2 >> beta.
                let e_prod = (&plus * &minus - &eye * beta).norm() / (plus.norm() * minus.norm());
                let e_diff = (&plus - &minus - &a).norm() / (1.0 + a.norm());
                let e_quad = (&plus * (&plus - &a) - &eye * beta).norm() / (1.0 + a.norm().powi(2));
                let d = PhiPlusDerivative::new(beta, &eig_sym(&a).unwrap())
                    .unwrap()
                    .apply(&dir)
                    .unwrap();
                let fd = (phi_plus_matrix(beta, &(&a + &dir * h)).unwrap()
                    - phi_plus_matrix(beta, &(&a - &dir * h)).unwrap())
                    / (2.0 * h);
                let e_deriv = (&d - &fd).norm() / (1.0 + d.norm());
                pass &= e_prod <= 1e-9 && e_diff <= 1e-9 && e_quad <= 1e-8 && e_deriv <= 1e-5;
                prod = prod.max(e_prod);
                diff = diff.max(e_diff);
                quad = quad.max(e_quad);
                deriv = deriv.max(e_deriv);
            }
        }
        Verdict {
            pass,
            detail: format!(
                "300 (A, beta) pairs: product {prod:.1e}, difference {diff:.1e} (tol 1e-9); quadratic {quad:.1e} (tol 1e-8 (1 + |A|^2)); derivative vs FD {deriv:.1e} (tol 1e-5)"
            ),
        }
    });
}

// ---------------------------------------------------------------- criterion 4

fn random_instance(p: usize, k: usize, r: &mut impl Rng) -> ProblemData {
    let covs = (0..k)
        .map(|_| {
            let z = DMatrix::from_fn(p, 3 * p, |_, _| normal(r));
            &z * z.transpose() / (3 * p) as f64
        })
        .collect();
    ProblemData::from_covariances(covs).unwrap()
}

/// Orthonormal basis of symmetric ensembles.
fn symmetric_basis(p: usize, k: usize) -> Vec<PrecisionEnsemble> {
    let mut basis = Vec::new();
    for c in 0..k {
        for i in 0..p {
            for j in i..p {
                let v = if i == j {
                    1.0
                } else {
                    std::f64::consts::FRAC_1_SQRT_2
                };
                basis.push(PrecisionEnsemble::from_fn(p, k, |cc, a, b| {
                    if cc == c && ((a == i && b == j) || (a == j && b == i)) {
                        v
                    } else {
                        0.0
                    }
                }));
            }
        }
    }
    basis
}

#[test]
fn criterion_04_dual_calculus() {
    run_criterion(4, Some(Duration::from_secs(30)), || {
        let mut r = rng(4);
        let h = 1e-6;
        let (mut worst_grad, mut worst_adj, mut max_curv) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        let (mut worst_res_ratio, mut worst_dir_ratio) = (0.0f64, 0.0f64);
        for probe in 0..50 {
            let p = [3, 4, 5][probe % 3];
            let k = [1, 2, 3][(probe / 3) % 3];
            let data = random_instance(p, k, &mut r);
            let params = GglParams::new(
                [0.05, 0.2, 0.5][probe % 3],
                [0.0, 0.1, 0.3][(probe / 2) % 3],
            )
            .unwrap();
            let sigma = [0.3, 1.0, 5.0][(probe / 5) % 3];
            let omega_t = PrecisionEnsemble::identity(p, k);
            let theta_t = &omega_t + &random_sym_ensemble(p, k, 0.1, &mut r);
            let x = random_sym_ensemble(p, k, 0.3, &mut r);
            let mut state =
                SubproblemState::new(&data, params, omega_t, theta_t, sigma, x.clone()).unwrap();

            let d = random_sym_ensemble(p, k, 1.0, &mut r);
            let mut up = x.clone();
            up.axpy(h, &d);
            let mut dn = x.clone();
            dn.axpy(-h, &d);
            let fd = (state.dual_objective(&up).unwrap() - state.dual_objective(&dn).unwrap())
                / (2.0 * h);
            let g = state.gradient().clone();
            let analytic = g.inner(&d).unwrap();
            worst_grad = worst_grad.max((fd - analytic).abs() / (g.norm() * d.norm()).max(1e-300));

            let d2 = random_sym_ensemble(p, k, 1.0, &mut r);
            let vd = state.hessian_apply(&d).unwrap();
            let vd2 = state.hessian_apply(&d2).unwrap();
            let asym = (vd.inner(&d2).unwrap() - d.inner(&vd2).unwrap()).abs()
                / (vd.norm() * d2.norm()).max(1e-300);
            worst_adj = worst_adj.max(asym);
            max_curv = max_curv.max(d.inner(&vd).unwrap() / d.norm_squared());

            // Dense direct solve of (-V) D = grad on the symmetric basis.
            let basis = symmetric_basis(p, k);
            let images: Vec<PrecisionEnsemble> = basis
                .iter()
                .map(|e| state.hessian_apply(e).unwrap())
                .collect();
            let m = basis.len();
            let hmat = DMatrix::from_fn(m, m, |a, b| -basis[a].inner(&images[b]).unwrap());
            let rhs = DVector::from_fn(m, |a, _| basis[a].inner(&g).unwrap());
            let lambda_min = hmat.clone().symmetric_eigenvalues().min();
            let coef = hmat
                .clone()
                .cholesky()
                .expect("-V must be positive definite")
                .solve(&rhs);
            let mut direct = PrecisionEnsemble::zeros(p, k);
            for (c, e) in coef.iter().zip(&basis) {
                direct.axpy(*c, e);
            }
            let config = NewtonConfig::default();
            let cg = state.newton_direction(&g, &config).unwrap();
            let mut residual = state.hessian_apply(&cg.direction).unwrap();
            residual.scale_mut(-1.0);
            residual.axpy(-1.0, &g);
            let tol = cg.tolerance.max(1e-14 * g.norm());
            worst_res_ratio = worst_res_ratio.max(residual.norm() / tol);
            let mut err = cg.direction.clone();
            err.axpy(-1.0, &direct);
            worst_dir_ratio = worst_dir_ratio.max(err.norm() / (tol / lambda_min));
        }
        // Residual ratios slightly above 1 reflect the recomputed residual
        // differing from CG's recursive one by roundoff.
        let pass = worst_grad <= 1e-5
            && worst_adj <= 1e-10
            && max_curv < 0.0
            && worst_res_ratio <= 1.01
            && worst_dir_ratio <= 1.01;
        Verdict {
            pass,
            detail: format!(
                "50 probes: gradient vs FD {worst_grad:.1e} (tol 1e-5), self-adjointness {worst_adj:.1e}, max Rayleigh quotient {max_curv:.2e} (< 0), CG residual / forcing tol {worst_res_ratio:.2}, direction error / (tol / lambda_min) {worst_dir_ratio:.2}"
            ),
        }
    });
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_closed_form_instances() {
    run_criterion(5, Some(Duration::from_secs(10)), || {
        let (p, k) = (20, 3);
        let mut notes = Vec::new();
        let mut pass = true;
        let identity = ProblemData::new(vec![DMatrix::identity(p, p); k], vec![100; k]).unwrap();
        for (l1, l2) in [(0.01, 0.0), (0.1, 0.1), (5.0, 2.0)] {
            let params = GglParams::new(l1, l2).unwrap();
            let pp = solve(&identity, &params, &PpdnaConfig::default()).unwrap();
            let ad = solve_admm(&identity, &params, &AdmmConfig::default()).unwrap();
            let eye = PrecisionEnsemble::identity(p, k);
            let ep = (&pp.theta - &eye).max_abs();
            let ea = (&ad.theta - &eye).max_abs();
            pass &=
                ep <= 1e-6 && ea <= 1e-6 && pp.eta_p <= 1e-6 && ad.converged && ad.eta_a <= 1e-6;
            notes.push(format!(
                "S = I, lambda ({l1}, {l2}): |Theta - I| ppdna {ep:.1e} admm {ea:.1e}"
            ));
        }
        let mut r = rng(5);
        let data = random_instance(p, k, &mut r);
        let mut max_off = 0.0f64;
        for c in 0..k {
            let s = data.covariance(c);
            for i in 0..p {
                for j in (0..p).filter(|&j| j != i) {
                    max_off = max_off.max(s[(i, j)].abs());
                }
            }
        }
        let params = GglParams::new(1e3 * max_off, 0.0).unwrap();
        let expected = PrecisionEnsemble::from_fn(p, k, |c, i, j| {
            if i == j {
                1.0 / data.covariance(c)[(i, i)]
            } else {
                0.0
            }
        });
        // Entry-wise accuracy of 1e-6 needs a KKT residual well below 1e-6.
        let pp = solve(
            &data,
            &params,
            &PpdnaConfig {
                epsilon: 1e-9,
                ..PpdnaConfig::default()
            },
        )
        .unwrap();
        let ad = solve_admm(
            &data,
            &params,
            &AdmmConfig {
                tol: 1e-9,
                ..AdmmConfig::default()
            },
        )
        .unwrap();
        let ep = (&pp.theta - &expected).max_abs();
        let ea = (&ad.theta - &expected).max_abs();
        pass &= ep <= 1e-6 && ea <= 1e-6 && pp.eta_p <= 1e-6 && ad.converged;
        notes.push(format!(
            "large lambda1: |Theta - diag(1/S_ii)| ppdna {ep:.1e} admm {ea:.1e}"
        ));
        Verdict {
            pass,
            detail: notes.join("; "),
        }
    });
}

// ------------------------------------------------------------ criteria 6, 7, 9

const AGREEMENT_SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

struct AgreementRun {
    seed: u64,
    ppdna: Result<PpdnaSolution, GglError>,
    admm: ggl::AdmmSolution,
}

/// The criterion-6 runs, shared by criteria 6, 7 and 9.
fn agreement_runs() -> &'static [AgreementRun] {
    static RUNS: OnceLock<Vec<AgreementRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        AGREEMENT_SEEDS
            .iter()
            .map(|&seed| {
                let (data, _) = benchmark(100, seed);
                let params = standard_params();
                AgreementRun {
                    seed,
                    ppdna: solve(&data, &params, &PpdnaConfig::default()),
                    admm: solve_admm(&data, &params, &AdmmConfig::default()).unwrap(),
                }
            })
            .collect()
    })
}

#[test]
fn criterion_06_cross_solver_agreement() {
    run_criterion(6, Some(Duration::from_secs(300)), || {
        let mut pass = true;
        let mut notes = Vec::new();
        for run in agreement_runs() {
            let Ok(pp) = &run.ppdna else {
                pass = false;
                notes.push(format!("seed {}: PPDNA failed", run.seed));
                continue;
            };
            let obj = (pp.pobj - run.admm.pobj).abs() / (1.0 + pp.pobj.abs());
            let dist = (&pp.theta - &run.admm.theta).norm() / (1.0 + pp.theta.norm());
            pass &= run.admm.converged && obj <= 1e-5 && dist <= 1e-4;
            notes.push(format!("seed {}: obj {obj:.1e}, dist {dist:.1e}", run.seed));
        }
        Verdict {
            pass,
            detail: format!("relative objective gap (tol 1e-5) and Frobenius distance / (1 + |Theta|) (tol 1e-4): {}", notes.join(", ")),
        }
    });
}

#[test]
fn criterion_07_kkt_termination() {
    run_criterion(7, None, || {
        let mut worst_eta = 0.0f64;
        let mut worst_gap = 0.0f64;
        let mut count = 0;
        let mut failures = 0;
        let mut record = |sol: &Result<PpdnaSolution, GglError>| match sol {
            Ok(s) => {
                count += 1;
                worst_eta = worst_eta.max(s.eta_p);
                worst_gap = worst_gap.max(s.relgap.abs());
            }
            Err(_) => failures += 1,
        };
        for run in agreement_runs() {
            record(&run.ppdna);
        }
        let (data, _) = benchmark(50, 3);
        for w1 in [0.02, 0.05, 0.1] {
            record(&solve(
                &data,
                &reparam_to_lambda(w1, 0.2).unwrap(),
                &PpdnaConfig::default(),
            ));
        }
        Verdict {
            pass: count > 0 && failures == 0 && worst_eta <= 1e-6 && worst_gap <= 1e-5,
            detail: format!("{count} converged runs ({failures} failed): max eta_p {worst_eta:.2e} (tol 1e-6), max relative gap {worst_gap:.2e} (tol 1e-5)"),
        }
    });
}

#[test]
fn criterion_09_newton_efficiency() {
    run_criterion(9, None, || {
        let mut pass = true;
        let mut notes = Vec::new();
        for run in agreement_runs() {
            let Ok(pp) = &run.ppdna else {
                pass = false;
                notes.push(format!("seed {}: PPDNA failed", run.seed));
                continue;
            };
            let outer = pp.trace.outer_iterations();
            let newton = pp.trace.total_newton_iters();
            let avg = newton as f64 / outer.max(1) as f64;
            let last = pp
                .trace
                .subproblems
                .last()
                .map(|s| s.grad_norms.clone())
                .unwrap_or_default();
            let superlinear = last.windows(2).all(|w| w[1] <= 10.0 * w[0].powf(1.1));
            pass &= outer <= 30 && avg <= 4.0 && superlinear;
            notes.push(format!(
                "seed {}: {outer}({newton}) avg {avg:.2}, last subproblem {}",
                run.seed,
                if superlinear {
                    "superlinear"
                } else {
                    "not superlinear"
                }
            ));
        }
        Verdict {
            pass,
            detail: format!(
                "outer <= 30, Newton per subproblem <= 4: {}",
                notes.join(", ")
            ),
        }
    });
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_08_linear_rate() {
    run_criterion(8, Some(Duration::from_secs(120)), || {
        let (data, _) = benchmark(50, 3);
        let params = standard_params();
        let reference = solve(
            &data,
            &params,
            &PpdnaConfig {
                epsilon: 1e-10,
                ..PpdnaConfig::default()
            },
        )
        .unwrap();
        let reference = reference.triple();
        let run = |sigma0: f64, sigma_growth: f64| -> Vec<f64> {
            let mut config = PpdnaConfig {
                epsilon: 1e-10,
                max_outer_iters: 40,
                sigma0,
                sigma_growth,
                ..PpdnaConfig::default()
            };
            // Started from the identity so the pre-asymptotic phase is
            // visible; a warm start lands next to the solution.
            config.warm_start.enabled = false;
            config.newton.max_newton_iters = 3000;
            let trace = match solve_with_reference(&data, &params, &config, &reference) {
                Ok(sol) => sol.trace,
                Err(GglError::OuterCap { trace, .. }) | Err(GglError::Subproblem { trace, .. }) => {
                    *trace
                }
                Err(e) => panic!("rate run failed: {e}"),
            };
            trace
                .distances()
                .unwrap_or_default()
                .iter()
                .map(|d| d.log10())
                .collect()
        };

        let fixed = run(1e8, 1.0);
        let fixed_tail = rate_tail(&fixed);
        let (slope, r2) = linear_fit(fixed_tail);
        let fixed_ok = fixed_tail.len() >= 3 && slope < -0.2 && r2 >= 0.9;

        let growth = run(1.0, 1.3);
        let growth_tail = rate_tail(&growth);
        let ratios: Vec<f64> = growth_tail.windows(2).map(|w| w[1] - w[0]).collect();
        let growth_ok = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|l| format!("{l:.2}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        Verdict {
            pass: fixed_ok && growth_ok,
            detail: format!(
                "fixed sigma: {} tail points, slope {slope:.3} (< -0.2), R^2 {r2:.3} (>= 0.9), log10 d = [{}]; zeta 1.3: log10 ratios [{}] {}",
                fixed_tail.len(),
                fmt(&fixed),
                fmt(&ratios),
                if growth_ok { "nonincreasing" } else { "not nonincreasing" }
            ),
        }
    });
}

// --------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_recovery() {
    run_criterion(10, Some(Duration::from_secs(600)), || {
        let (data, truth) = benchmark(100, 21);
        let grid = [0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.12, 0.2];
        let mut points = Vec::new();
        for w1 in grid {
            let sol = solve(
                &data,
                &reparam_to_lambda(w1, 0.2).unwrap(),
                &PpdnaConfig::default(),
            )
            .unwrap();
            points.push((w1, edge_report(&sol.sparse_theta, &truth).unwrap()));
        }
        let true_edges = points[0].1.true_edges as f64;
        let good: Vec<_> = points
            .iter()
            .filter(|(_, r)| {
                r.total.tp as f64 >= 0.9 * true_edges && r.total.fp as f64 <= 0.05 * true_edges
            })
            .collect();
        // SSE along increasing selected-edge counts.
        let mut by_size: Vec<_> = points
            .iter()
            .map(|(_, r)| (r.selected_edges, r.sse))
            .collect();
        by_size.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let inversions = by_size.windows(2).filter(|w| w[1].1 > w[0].1).count();
        // Differential edges at the best point: largest TP - FP among the
        // points meeting the edge-recovery target, or overall if none does.
        let candidates: Vec<_> = if good.is_empty() {
            points.iter().collect()
        } else {
            good.clone()
        };
        let best = candidates
            .into_iter()
            .max_by_key(|(_, r)| r.total.tp as i64 - r.total.fp as i64)
            .expect("nonempty grid");
        let diff = &best.1.differential_total;
        let diff_ok = diff.tp_diff as f64 >= 0.8 * diff.true_diff as f64
            && diff.fp_diff as f64 <= 0.1 * diff.true_diff as f64;
        let summary = points
            .iter()
            .map(|(w1, r)| {
                format!(
                    "w1 {w1}: tp {} fp {} sse {:.1}",
                    r.total.tp, r.total.fp, r.sse
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        Verdict {
            pass: !good.is_empty() && inversions <= 1 && diff_ok,
            detail: format!(
                "{} true edges; {} grid points with TP >= 90% and FP <= 5%; {inversions} SSE inversions; differential at w1 {}: tp {} fp {} of {}; [{summary}]",
                true_edges,
                good.len(),
                best.0,
                diff.tp_diff,
                diff.fp_diff,
                diff.true_diff
            ),
        }
    });
}

// --------------------------------------------------------------- criterion 11

#[test]
fn criterion_11_protocol_constants() {
    run_criterion(11, None, || {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let generate = [
            "ggl",
            "generate",
            "--p",
            "12",
            "--K",
            "2",
            "--samples",
            "500",
            "--seed",
            "1",
            "--out",
        ];
        let problem = root.join("problem");
        let mut args: Vec<String> = generate.iter().map(|s| s.to_string()).collect();
        args.push(problem.display().to_string());
        assert_eq!(ggl::cli::run(args), 0);
        let manifest = problem.join("manifest.json").display().to_string();
        let echo = |solver: &str| -> serde_json::Value {
            let out = root.join(solver);
            let code = ggl::cli::run([
                "ggl",
                "solve",
                "--manifest",
                &manifest,
                "--solver",
                solver,
                "--w1",
                "0.1",
                "--w2",
                "0.2",
                "--out",
                &out.display().to_string(),
            ]);
            assert_eq!(code, 0);
            let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
            serde_json::from_str::<serde_json::Value>(&text).unwrap()["config"].clone()
        };
        let pp = echo("ppdna");
        let ad = echo("admm");
        let checks = [
            ("ADMM cap", ad["admm"]["max_iters"].as_u64() == Some(20_000)),
            ("tau", ad["admm"]["tau"].as_f64() == Some(1.618)),
            (
                "warm-start steps",
                pp["ppdna"]["warm_start"]["max_iters"].as_u64() == Some(3000),
            ),
            (
                "warm-start tolerance factor",
                pp["ppdna"]["warm_start"]["tol_factor"].as_f64() == Some(100.0),
            ),
            ("eps0", pp["ppdna"]["eps0"].as_f64() == Some(0.5)),
            ("mu", pp["ppdna"]["newton"]["mu"].as_f64() == Some(1e-4)),
            ("rho", pp["ppdna"]["newton"]["rho"].as_f64() == Some(0.5)),
            (
                "eta_bar",
                pp["ppdna"]["newton"]["eta_bar"].as_f64() == Some(0.1),
            ),
            ("epsilon", pp["ppdna"]["epsilon"].as_f64() == Some(1e-6)),
        ];
        let failed: Vec<_> = checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| *n)
            .collect();
        Verdict {
            pass: failed.is_empty(),
            detail: if failed.is_empty() {
                format!("{} constants echoed exactly in summary.json", checks.len())
            } else {
                format!("mismatched: {}", failed.join(", "))
            },
        }
    });
}
