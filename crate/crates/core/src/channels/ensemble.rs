use super::LinearMap;
use crate::error::{Error, Result};
use crate::numkit::{ComplexMatrix, STRUCT_TOL};

/// The mixed unitary channel `X ↦ Σ_l p_l U_l X U_l^*` on `M_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedUnitaryEnsemble {
    n: usize,
    weights: Vec<f64>,
    unitaries: Vec<ComplexMatrix>,
}

impl MixedUnitaryEnsemble {
    /// Validates positivity, normalisation (within 1e-12) and unitarity (within 1e-10).
    pub fn new(weights: Vec<f64>, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(weights, unitaries, 1e-12)
    }

    /// Like [`new`](Self::new) with a caller-chosen weight-sum tolerance; the weights are
    /// renormalised to sum to one afterwards.
    pub fn with_tolerance(weights: Vec<f64>, unitaries: Vec<ComplexMatrix>, weight_tol: f64) -> Result<Self> {
        if weights.is_empty() || weights.len() != unitaries.len() {
            return Err(Error::InvalidInput(format!(
                "ensemble needs matching non-empty weights/unitaries, got {} and {}",
                weights.len(),
                unitaries.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("ensemble weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > weight_tol {
            return Err(Error::InvalidInput(format!("ensemble weights sum to {total}, not 1")));
        }
        let n = unitaries[0].rows();
        for u in &unitaries {
            if u.rows() != n || u.cols() != n {
                return Err(Error::ShapeMismatch("ensemble unitaries have mixed sizes".into()));
            }
            let residual = u.unitarity_residual();
            if residual > STRUCT_TOL {
                return Err(Error::NotUnitary { residual });
            }
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { n, weights, unitaries })
    }

    pub(crate) fn from_parts_unchecked(n: usize, weights: Vec<f64>, unitaries: Vec<ComplexMatrix>) -> Self {
        Self { n, weights, unitaries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.weights.iter().copied().zip(&self.unitaries)
    }

    /// Ensemble of `outer ∘ inner`: unitaries `V U` with weights `q p`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        if outer.n != inner.n {
            return Err(Error::ShapeMismatch("cannot compose ensembles of different size".into()));
        }
        let mut weights = Vec::with_capacity(outer.len() * inner.len());
        let mut unitaries = Vec::with_capacity(weights.capacity());
        for (q, v) in outer.iter() {
            for (p, u) in inner.iter() {
                weights.push(q * p);
                unitaries.push(v * u);
            }
        }
        Ok(Self::from_parts_unchecked(outer.n, weights, unitaries))
    }

    /// Convex combination `t A + (1 - t) B` of two ensembles on the same space.
    pub fn mix(a: &Self, b: &Self, t: f64) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::ShapeMismatch("cannot mix ensembles of different size".into()));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidInput(format!("mixing parameter {t} not in (0, 1)")));
        }
        let weights = a
            .weights
            .iter()
            .map(|w| w * t)
            .chain(b.weights.iter().map(|w| w * (1.0 - t)))
            .collect();
        let unitaries = a.unitaries.iter().chain(&b.unitaries).cloned().collect();
        Ok(Self::from_parts_unchecked(a.n, weights, unitaries))
    }

    /// Largest unitarity residual among the members.
    pub fn max_unitarity_residual(&self) -> f64 {
        self.unitaries
            .iter()
            .map(|u| u.unitarity_residual())
            .fold(0.0, f64::max)
    }
}

impl LinearMap for MixedUnitaryEnsemble {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_ensemble(self, x)
    }
}

/// `Σ_l p_l U_l X U_l^*`.
pub fn apply_ensemble(e: &MixedUnitaryEnsemble, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    e.check_input(x)?;
    let mut acc = ComplexMatrix::zeros(e.n, e.n);
    for (p, u) in e.iter() {
        acc = &acc + &x.conjugate_by(u).scale_real(p);
    }
    Ok(acc)
}
