//! Support recovery along a penalty path: sweep `w1` at fixed `w2` and score
//! each estimate against the generating network (true/false positives, SSE
//! and differential edges between consecutive classes).
//!
//! ```text
//! cargo run --release --example edge_recovery -- [p] [seed]
//! ```

use ggl::datagen::{gen_nn_network, reparam_to_lambda, sample_covariance, sample_gaussian};
use ggl::metrics::edge_report;
use ggl::{PpdnaConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(100, |a| a.parse().expect("p must be an integer"));
    let seed: u64 = args
        .next()
        .map_or(21, |a| a.parse().expect("seed must be an integer"));

    let truth = gen_nn_network(p, 3, 5, 4, seed)?;
    let samples = sample_gaussian(&truth, 10_000, seed)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let data = ProblemData::new(covariances, vec![10_000; 3])?;
    println!(
        "p = {p}: {} true edges ({} shared by every class)",
        truth.total_edges(),
        truth.common_edge_count()
    );
    println!(
        "{:>7} {:>9} {:>6} {:>6} {:>9} {:>8} {:>8}",
        "w1", "selected", "tp", "fp", "sse", "diff tp", "diff fp"
    );
    for w1 in [0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.12, 0.2] {
        let sol = ggl::solve(&data, &reparam_to_lambda(w1, 0.2)?, &PpdnaConfig::default())?;
        let r = edge_report(&sol.sparse_theta, &truth)?;
        println!(
            "{w1:>7} {:>9} {:>6} {:>6} {:>9.2} {:>8} {:>8}",
            r.selected_edges,
            r.total.tp,
            r.total.fp,
            r.sse,
            r.differential_total.tp_diff,
            r.differential_total.fp_diff
        );
    }
    Ok(())
}
