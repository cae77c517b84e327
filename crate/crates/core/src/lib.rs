//! Mixed-unitary factorisations of Schur multipliers tensored with the completely
//! depolarising channel.
//!
//! A correlation matrix `C` defines the Schur multiplier `S_C(X) = C ∘ X`. The map
//! `δ_d ⊗ S_C` on `M_d ⊗ M_k` is mixed unitary exactly when `C` is a convex combination of
//! Gram matrices `(tr_d(U_i^* U_j))` of unitary `k`-tuples. This crate builds both directions
//! of that equivalence explicitly, the Δ-compression and diagonal biaverage that turn an
//! approximate factorisation into a Schur-symbol estimate, the unitary dilation that corrects
//! it into a certified convex hull member of doubled dimension, and heuristic solvers for
//! hull membership and Schur multiplier norms.
//!
//! Block layout: an element of `M_d ⊗ M_k` is a `dk x dk` matrix read as a `k x k` grid of
//! `d x d` blocks, row index `i*d + r` for coarse `i` and fine `r` (both 0-based).

pub mod channels;
pub mod error;
pub mod factorise;
pub mod norms;
pub mod numkit;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numkit::{ComplexMatrix, Seed};
