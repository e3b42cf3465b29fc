//! PPDNA against the ADMM baseline on the same instance and tolerance:
//! iteration counts, wall time, final residuals and objective agreement.
//!
//! ```text
//! cargo run --release --example compare_solvers -- [p] [seed]
//! ```

use std::time::Instant;

use ggl::datagen::{gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian};
use ggl::{solve_admm, AdmmConfig, PpdnaConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(100, |a| a.parse().expect("p must be an integer"));
    let seed: u64 = args
        .next()
        .map_or(11, |a| a.parse().expect("seed must be an integer"));

    let truth = gen_nn_network(p, 3, 5, 4, seed)?;
    let samples = sample_gaussian(&truth, 10_000, seed)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let data = ProblemData::new(covariances, vec![10_000; 3])?;

    for (w1, w2) in [(0.02, 0.2), (0.05, 0.2), (0.1, 0.5)] {
        let params = reparam_to_lambda(w1, w2)?;
        let clock = Instant::now();
        let pp = ggl::solve(&data, &params, &PpdnaConfig::default())?;
        let t_pp = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let ad = solve_admm(&data, &params, &AdmmConfig::default())?;
        let t_ad = clock.elapsed().as_secs_f64();
        let agreement = (pp.pobj - ad.pobj).abs() / (1.0 + pp.pobj.abs() + ad.pobj.abs());
        println!(
            "w = ({w1}, {w2}): PPDNA {}({}) {t_pp:.2} s eta {:.1e} | ADMM {} {t_ad:.2} s eta {:.1e} | objective agreement {agreement:.1e}",
            pp.trace.outer_iterations(),
            pp.trace.total_newton_iters(),
            pp.eta_p,
            ad.iterations,
            ad.eta_a
        );
    }
    Ok(())
}
