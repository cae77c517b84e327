//! Norms of Schur multipliers and lower bounds for superoperator norms.

mod cb;
mod superop;

pub use cb::{schur_cb_norm, schur_cb_norm_with, BisectionStep, CbParams, ProbeOutcome};
pub use superop::{superop_norm_lb, AscentParams, BasisTable};

use crate::error::{Error, Result};
use crate::numkit::{min_eigenvalue, ComplexMatrix, STRUCT_TOL};

/// Two-sided estimate of a norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: &'static str,
}

impl NormEstimate {
    pub fn new(lower: f64, upper: f64, method: &'static str) -> Self {
        Self { lower, upper, method }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `‖S_Y‖ = ‖S_Y(I)‖ = max_i y_ii` for a PSD symbol `Y`.
pub fn schur_norm_psd(y: &ComplexMatrix) -> Result<f64> {
    y.check_square("Schur symbol")?;
    let min_eig = min_eigenvalue(y)?;
    if min_eig < -STRUCT_TOL * (1.0 + y.fro_norm()) {
        return Err(Error::NotPsd { min_eig });
    }
    Ok(y.diagonal().iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re)))
}
