//! Dense linear algebra helpers plus the two special-purpose routines the
//! design phase depends on: a discrete algebraic Riccati solver and the
//! regularized lower incomplete gamma function with its inverse.
//!
//! Matrices are `nalgebra::DMatrix<f64>`; every routine here is a pure
//! function of its inputs.

mod gamma;
mod linalg;
mod riccati;
pub mod serde_mat;

pub use gamma::{gamma_p, gamma_p_inv, ln_gamma};
pub use linalg::{
    cholesky_factor, is_symmetric, kernel_basis, left_inverse, quad_form, rank_ratio, symmetrize,
    RANK_TOL,
};
pub use riccati::{dare_residual, dare_solve, kalman_gain, RiccatiSolution, DARE_MAX_ITER, DARE_TOL};

pub type Mat = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
