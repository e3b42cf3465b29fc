//! The spectral maps behind the log-determinant prox: `phi_plus` and
//! `phi_minus`, their defining identities, and the derivative operator used by
//! the Newton Hessian.
//!
//! ```text
//! cargo run --example spectral_calculus
//! ```

use ggl::spectral::{eig_sym, moreau_logdet, phi_minus_matrix, phi_plus_matrix, PhiPlusDerivative};
use nalgebra::DMatrix;

fn main() -> ggl::Result<()> {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 0.5, 0.3, 0.0, 0.3, -1.5]);
    let beta = 0.5;
    let plus = phi_plus_matrix(beta, &a)?;
    let minus = phi_minus_matrix(beta, &a)?;
    let eye = DMatrix::<f64>::identity(3, 3);
    println!("phi_plus(A) ={plus:.5}");
    println!(
        "|phi_plus phi_minus - beta I| = {:.2e}",
        (&plus * &minus - &eye * beta).norm()
    );
    println!(
        "|phi_plus - phi_minus - A|    = {:.2e}",
        (&plus - &minus - &a).norm()
    );

    let decomp = eig_sym(&a)?;
    println!("eigenvalues of A: {:.4}", decomp.d.transpose());
    println!(
        "Moreau envelope of beta * (-log det) at A: {:.6}",
        moreau_logdet(beta, &decomp)?
    );

    // Directional derivative against a central difference.
    let dir = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.25 });
    let h = 1e-6;
    let analytic = PhiPlusDerivative::new(beta, &decomp)?.apply(&dir)?;
    let numeric = (phi_plus_matrix(beta, &(&a + &dir * h))?
        - phi_plus_matrix(beta, &(&a - &dir * h))?)
        / (2.0 * h);
    println!(
        "derivative vs finite difference: {:.2e}",
        (&analytic - &numeric).norm()
    );
    Ok(())
}
