//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is deterministic: Jacobi-type iterations with fixed sweep order, and
//! random generators driven by an explicit [`Seed`].

mod eig;
mod matrix;
pub mod random;
mod svd;

pub use eig::{herm_eig, is_psd, min_eigenvalue, sqrt_psd, EigenSystem, STRUCT_TOL};
pub use matrix::{ComplexMatrix, ONE, ZERO};
pub use random::{random_correlation, random_haar_unitary, Seed};
pub use svd::{op_norm, polar, svd, PolarParts, Svd};

/// Tolerance for reconstruction checks.
pub const RECON_TOL: f64 = 1e-9;

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}
