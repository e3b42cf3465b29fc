//! Empirical linear convergence of the proximal point solver: solve once to
//! 1e-10 as a reference, then re-solve from the identity with a fixed large
//! proximal step and with a growing one, printing `log10` of the relative
//! distance to the reference at every outer iteration and a line fit over
//! the iterates above the reference's accuracy floor.
//!
//! ```text
//! cargo run --release --example linear_rate -- [p] [seed]
//! ```

use ggl::datagen::{gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian};
use ggl::metrics::{linear_fit, rate_tail};
use ggl::ppdna::solve_with_reference;
use ggl::{GglError, PpdnaConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(50, |a| a.parse().expect("p must be an integer"));
    let seed: u64 = args
        .next()
        .map_or(3, |a| a.parse().expect("seed must be an integer"));

    let truth = gen_nn_network(p, 3, 5, 4, seed)?;
    let samples = sample_gaussian(&truth, 10_000, seed)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let data = ProblemData::new(covariances, vec![10_000; 3])?;
    let params = reparam_to_lambda(0.05, 0.2)?;

    let reference = ggl::solve(
        &data,
        &params,
        &PpdnaConfig {
            epsilon: 1e-10,
            ..PpdnaConfig::default()
        },
    )?;
    println!(
        "reference: eta_p = {:.2e} after {} outer iterations",
        reference.eta_p,
        reference.trace.outer_iterations()
    );
    let reference = reference.triple();

    let policies = [
        ("fixed sigma = 1e8", 1e8, 1.0),
        ("sigma growth 1.3 from 1", 1.0, 1.3),
    ];
    for (name, sigma0, sigma_growth) in policies {
        let mut config = PpdnaConfig {
            epsilon: 1e-10,
            max_outer_iters: 40,
            sigma0,
            sigma_growth,
            ..PpdnaConfig::default()
        };
        // Starting from the identity exposes the pre-asymptotic phase that a
        // warm start would mostly skip; a large proximal step at that
        // distance needs many more Newton steps than the default budget.
        config.warm_start.enabled = false;
        config.newton.max_newton_iters = 3000;
        let trace = match solve_with_reference(&data, &params, &config, &reference) {
            Ok(sol) => sol.trace,
            Err(GglError::OuterCap { trace, .. }) => *trace,
            Err(GglError::Subproblem { trace, reason, .. }) => {
                println!("subproblem failure: {reason}");
                *trace
            }
            Err(e) => return Err(e),
        };
        let logs: Vec<f64> = trace
            .distances()
            .unwrap_or_default()
            .iter()
            .map(|d| d.log10())
            .collect();
        println!("{name}:");
        for (t, l) in logs.iter().enumerate() {
            println!("  t = {t:>3}  log10 d_t = {l:>8.3}");
        }
        let tail = rate_tail(&logs);
        let (slope, r2) = linear_fit(tail);
        println!(
            "  fit over {} iterates: slope {slope:.3} per iteration, R^2 {r2:.3}",
            tail.len()
        );
    }
    Ok(())
}
