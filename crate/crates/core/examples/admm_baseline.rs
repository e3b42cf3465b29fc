//! The ADMM baseline on its own, with residual-balancing penalty adaptation,
//! printing a thinned residual history.
//!
//! ```text
//! cargo run --release --example admm_baseline -- [p] [seed]
//! ```

use ggl::datagen::{gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian};
use ggl::{solve_admm, AdmmConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(50, |a| a.parse().expect("p must be an integer"));
    let seed: u64 = args
        .next()
        .map_or(1, |a| a.parse().expect("seed must be an integer"));

    let truth = gen_nn_network(p, 3, 5, 4, seed)?;
    let samples = sample_gaussian(&truth, 10_000, seed)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let data = ProblemData::new(covariances, vec![10_000; 3])?;
    let params = reparam_to_lambda(0.05, 0.2)?;

    let sol = solve_admm(&data, &params, &AdmmConfig::default())?;
    println!(
        "converged = {} after {} iterations: eta = {:.2e}, objective = {:.10}, final sigma = {:.3}",
        sol.converged, sol.iterations, sol.eta_a, sol.pobj, sol.sigma
    );
    let step = (sol.trace.records.len() / 10).max(1);
    for r in sol.trace.records.iter().step_by(step) {
        println!(
            "  iter {:>5}  sigma {:>8.3}  eta {:.3e}",
            r.iter, r.sigma, r.eta_a
        );
    }
    Ok(())
}
