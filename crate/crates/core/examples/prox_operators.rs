//! The sparse group Lasso proximal map on a single group, its generalized
//! Jacobian, and the ensemble-level penalty prox.
//!
//! ```text
//! cargo run --example prox_operators
//! ```

use ggl::proxops::{ggl_penalty, jac_prox_sgl, prox_ggl, prox_sgl};
use ggl::{GglParams, PrecisionEnsemble};

fn main() -> ggl::Result<()> {
    let (lambda1, lambda2) = (0.5, 1.0);
    for u in [
        vec![3.0, -1.0, 0.2],
        vec![0.8, 0.6, -0.3],
        vec![2.0, 0.0, 0.0],
    ] {
        let x = prox_sgl(&u, lambda1, lambda2)?;
        let jac = jac_prox_sgl(&u, lambda1, lambda2)?;
        println!("u = {u:?}");
        println!("  prox = {x:.4?}");
        println!("  Jacobian = {:.4}", jac.to_dense(u.len()));
    }

    // On an ensemble only off-diagonal groups are penalized; the diagonal
    // passes through unchanged.
    let params = GglParams::new(0.1, 0.05)?;
    let theta = PrecisionEnsemble::from_fn(4, 2, |k, i, j| {
        if i == j {
            1.0
        } else {
            0.8 / (1 + i + j + k) as f64
        }
    });
    let shrunk = prox_ggl(&theta, &params, 1.0)?;
    println!(
        "penalty before {:.4}, after {:.4}; block 1 after prox:{:.4}",
        ggl_penalty(&theta, &params),
        ggl_penalty(&shrunk, &params),
        shrunk.block(0)
    );
    Ok(())
}
