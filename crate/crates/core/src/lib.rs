//! Joint estimation of sparse precision matrices under the group graphical
//! Lasso penalty.
//!
//! Given sample covariances `S^(1), ..., S^(K)` of `K` related classes, the
//! estimator solves
//!
//! ```text
//!   min  sum_k ( -log det Theta^(k) + <S^(k), Theta^(k)> )
//!        + sum_{i != j} ( lambda1 ||Theta_[ij]||_1 + lambda2 ||Theta_[ij]||_2 )
//! ```
//!
//! where `Theta_[ij]` is the vector of `(i, j)` entries across the classes.
//! The element-wise term produces sparse graphs; the group term encourages
//! the classes to share their sparsity pattern.
//!
//! Two solvers are provided:
//!
//! * [`ppdna::solve`] — an inexact proximal point method whose subproblems
//!   are solved through their duals by a semismooth Newton-CG method
//!   ([`dualnewton`]). It exploits the sparsity of the penalty's generalized
//!   Jacobian and converges to high accuracy in a few dozen Newton steps.
//! * [`admm::solve_admm`] — a dual ADMM baseline, also used as a warm start.
//!
//! Supporting modules provide the building blocks ([`ensemble`],
//! [`spectral`], [`proxops`]), synthetic benchmarks and file I/O
//! ([`datagen`]), recovery and convergence metrics ([`metrics`]), and the
//! command implementations behind the `ggl` binary ([`cli`]).
//!
//! ```
//! use ggl::{GglParams, PpdnaConfig, ProblemData};
//! use nalgebra::DMatrix;
//!
//! let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
//! let data = ProblemData::from_covariances(vec![s.clone(), s]).unwrap();
//! let params = GglParams::new(0.05, 0.01).unwrap();
//! let sol = ggl::ppdna::solve(&data, &params, &PpdnaConfig::default()).unwrap();
//! assert!(sol.eta_p <= 1e-6);
//! ```

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod cli;
pub mod datagen;
pub mod dualnewton;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod ppdna;
pub mod proxops;
pub mod spectral;

pub use admm::{solve_admm, AdmmConfig, AdmmSolution};
pub use dualnewton::NewtonConfig;
pub use ensemble::{GglParams, PrecisionEnsemble, ProblemData};
pub use error::{GglError, Result};
pub use ppdna::{solve, PpdnaConfig, PpdnaSolution, SolveTrace, Triple};
