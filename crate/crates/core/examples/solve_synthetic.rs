//! Solve a nearest-neighbor benchmark instance with the proximal point
//! solver and print its convergence trace.
//!
//! ```text
//! cargo run --release --example solve_synthetic -- [p] [seed]
//! ```

use ggl::datagen::{gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian};
use ggl::{PpdnaConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(100, |a| a.parse().expect("p must be an integer"));
    let seed: u64 = args
        .next()
        .map_or(7, |a| a.parse().expect("seed must be an integer"));

    let truth = gen_nn_network(p, 3, 5, 4, seed)?;
    let samples = sample_gaussian(&truth, 10_000, seed)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let data = ProblemData::new(covariances, vec![10_000; 3])?;
    let params = reparam_to_lambda(0.05, 0.2)?;

    let start = std::time::Instant::now();
    let sol = ggl::solve(&data, &params, &PpdnaConfig::default())?;
    println!(
        "p = {p}: {} outer iterations, {} Newton steps, {} CG steps, warm start {} ADMM steps",
        sol.trace.outer_iterations(),
        sol.trace.total_newton_iters(),
        sol.trace.total_cg_iters(),
        sol.trace.warm_start_iters
    );
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>6} {:>6}",
        "iter", "sigma", "eta_p", "relgap", "newton", "cg"
    );
    for r in &sol.trace.records {
        println!(
            "{:>4} {:>10.2e} {:>10.2e} {:>10.2e} {:>6} {:>6}",
            r.iter, r.sigma, r.eta_p, r.relgap, r.newton_iters, r.cg_iters
        );
    }
    println!(
        "eta_p = {:.2e}, relgap = {:.2e}, primal objective = {:.10}, {:.2?}",
        sol.eta_p,
        sol.relgap,
        sol.pobj,
        start.elapsed()
    );
    Ok(())
}
