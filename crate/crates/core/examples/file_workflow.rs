//! The file-based workflow: write a generated problem and its ground truth
//! to disk, load it back through the manifest, solve and score.
//!
//! ```text
//! cargo run --release --example file_workflow -- [output dir]
//! ```

use std::path::PathBuf;

use ggl::datagen::{
    gen_nn_network, load_problem, read_truth, reparam_to_lambda, sample_covariance,
    sample_gaussian, write_matrix_csv, write_problem, write_truth,
};
use ggl::metrics::edge_report;
use ggl::{PpdnaConfig, ProblemData};

fn main() -> ggl::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("ggl_workflow"), PathBuf::from);
    std::fs::create_dir_all(&dir)
        .map_err(|e| ggl::GglError::InvalidArgument(format!("{}: {e}", dir.display())))?;

    let truth = gen_nn_network(40, 3, 5, 4, 9)?;
    let samples = sample_gaussian(&truth, 5_000, 9)?;
    let covariances = samples
        .iter()
        .map(sample_covariance)
        .collect::<ggl::Result<Vec<_>>>()?;
    let manifest = write_problem(&dir, &ProblemData::new(covariances, vec![5_000; 3])?)?;
    let truth_path = write_truth(&dir, &truth)?;
    println!("wrote {} and {}", manifest.display(), truth_path.display());

    let data = load_problem(&manifest)?;
    let sol = ggl::solve(
        &data,
        &reparam_to_lambda(0.05, 0.2)?,
        &PpdnaConfig::default(),
    )?;
    for k in 0..sol.sparse_theta.k_classes() {
        write_matrix_csv(
            &dir.join(format!("estimate_{}.csv", k + 1)),
            sol.sparse_theta.block(k),
        )?;
    }
    let report = edge_report(&sol.sparse_theta, &read_truth(&truth_path)?)?;
    println!(
        "eta_p = {:.2e}; {} of {} true edges found, {} false positives",
        sol.eta_p, report.total.tp, report.true_edges, report.total.fp
    );
    Ok(())
}
