//! Linear maps on `M_k` and on `M_d ⊗ M_k`: concrete channel representations, the
//! Weyl-Heisenberg depolarising ensemble, Δ-compression and the diagonal biaverage.
//!
//! Every representation implements [`LinearMap`]; conversions between them (for example
//! [`choi_of`] and [`kraus_from_choi`]) are explicit calls.

mod biaverage;
mod choi;
mod compress;
mod ensemble;
mod schur;
mod weyl;

pub use biaverage::{biaverage_pm_oracle, biaverage_pm_oracle_with_limit, d_biaverage, PM_ORACLE_DEFAULT_LIMIT};
pub use choi::{choi_of, kraus_from_choi, verify_channel, ChannelReport, ChoiMatrix, KrausChannel, CHANNEL_TOL};
pub use compress::{delta_compress, delta_compress_ensemble, delta_map, DepolarizedTensor};
pub use ensemble::{apply_ensemble, MixedUnitaryEnsemble};
pub use schur::{
    block_trace, embed_identity, lift_schur, schur_apply, verify_correlation, BlockOperator, CorrelationCheck,
    LiftedSchur, SchurSymbol,
};
pub use weyl::{cyclic_shift, depolarizing_ensemble, weyl_unitaries};

use crate::error::{Error, Result};
use crate::numkit::ComplexMatrix;

/// A linear map `M_{dim_in} -> M_{dim_out}`.
pub trait LinearMap {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;

    /// Applies the map; implementations return `ShapeMismatch` for a wrongly sized input.
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;

    fn check_input(&self, x: &ComplexMatrix) -> Result<()> {
        let n = self.dim_in();
        if x.rows() != n || x.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "map expects {n}x{n} input, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn dim_in(&self) -> usize {
        (**self).dim_in()
    }

    fn dim_out(&self) -> usize {
        (**self).dim_out()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        (**self).apply(x)
    }
}

/// The identity channel on `M_n`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl LinearMap for IdentityMap {
    fn dim_in(&self) -> usize {
        self.0
    }

    fn dim_out(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        Ok(x.clone())
    }
}

/// Pointwise difference `A - B` of two maps with matching dimensions.
#[derive(Debug, Clone)]
pub struct MapDifference<A, B> {
    pub lhs: A,
    pub rhs: B,
}

impl<A: LinearMap, B: LinearMap> MapDifference<A, B> {
    pub fn new(lhs: A, rhs: B) -> Result<Self> {
        if lhs.dim_in() != rhs.dim_in() || lhs.dim_out() != rhs.dim_out() {
            return Err(Error::ShapeMismatch("maps have different dimensions".into()));
        }
        Ok(Self { lhs, rhs })
    }
}

impl<A: LinearMap, B: LinearMap> LinearMap for MapDifference<A, B> {
    fn dim_in(&self) -> usize {
        self.lhs.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.lhs.dim_out()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(&self.lhs.apply(x)? - &self.rhs.apply(x)?)
    }
}

/// Largest Frobenius deviation between two maps over all matrix units `E_{i,j}`.
pub fn max_basis_deviation(a: &impl LinearMap, b: &impl LinearMap) -> Result<f64> {
    let n = a.dim_in();
    if b.dim_in() != n || a.dim_out() != b.dim_out() {
        return Err(Error::ShapeMismatch("maps have different dimensions".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = ComplexMatrix::unit(n, n, i, j);
            let dev = (&a.apply(&e)? - &b.apply(&e)?).fro_norm();
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}
