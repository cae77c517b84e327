use num_complex::Complex64;

use crate::channels::verify_correlation;
use crate::error::{Error, Result};
use crate::numkit::random::haar_unitary;
use crate::numkit::{ComplexMatrix, Seed, STRUCT_TOL};
use rand::Rng;
use rand_distr::Exp1;

/// A `k`-tuple of `d x d` unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryTuple {
    d: usize,
    unitaries: Vec<ComplexMatrix>,
}

impl UnitaryTuple {
    /// Requires every member to be unitary within 1e-10.
    pub fn new(unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(unitaries, STRUCT_TOL)
    }

    pub fn with_tolerance(unitaries: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let first = unitaries
            .first()
            .ok_or_else(|| Error::InvalidInput("unitary tuple is empty".into()))?;
        let d = first.rows();
        for u in &unitaries {
            if u.rows() != d || u.cols() != d {
                return Err(Error::ShapeMismatch("tuple members have mixed sizes".into()));
            }
            let residual = u.unitarity_residual();
            if residual > tol {
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(Self { d, unitaries })
    }

    pub(crate) fn from_parts_unchecked(d: usize, unitaries: Vec<ComplexMatrix>) -> Self {
        Self { d, unitaries }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.unitaries.len()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// Entrywise adjoint `(U_1^*, ..., U_k^*)`; swaps the two Gram conventions.
    pub fn adjoints(&self) -> Self {
        Self {
            d: self.d,
            unitaries: self.unitaries.iter().map(|u| u.adjoint()).collect(),
        }
    }

    /// Each member replaced by `factor` diagonal copies `U ⊕ ... ⊕ U`: same Gram matrix at
    /// dimension `factor·d`.
    pub fn inflated(&self, factor: usize) -> Self {
        Self {
            d: self.d * factor,
            unitaries: self
                .unitaries
                .iter()
                .map(|u| ComplexMatrix::direct_sum(&vec![u.clone(); factor]))
                .collect(),
        }
    }

    /// `(U_1 ⊕ U_1, ..., U_k ⊕ U_k)`: same Gram matrix at dimension `2d`.
    pub fn doubled(&self) -> Self {
        self.inflated(2)
    }
}

/// `(tr_d(U_i^* U_j))_{i,j}`.
pub fn gram_matrix(t: &UnitaryTuple) -> ComplexMatrix {
    let k = t.k();
    let d = t.d as f64;
    let mut g = ComplexMatrix::identity(k);
    for i in 0..k {
        for j in i + 1..k {
            let v: Complex64 = t.unitaries[i].inner(&t.unitaries[j]) / d;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    // the diagonal is tr_d(U_i^* U_i), equal to 1 for unitary members
    for i in 0..k {
        g[(i, i)] = Complex64::new(t.unitaries[i].fro_norm().powi(2) / d, 0.0);
    }
    g
}

/// Weighted family of unitary tuples sharing `(d, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryTupleEnsemble {
    weights: Vec<f64>,
    tuples: Vec<UnitaryTuple>,
}

impl UnitaryTupleEnsemble {
    /// Requires positive weights summing to one within 1e-12.
    pub fn new(weights: Vec<f64>, tuples: Vec<UnitaryTuple>) -> Result<Self> {
        Self::with_tolerance(weights, tuples, 1e-12)
    }

    /// Like [`new`](Self::new) with a caller-chosen weight-sum tolerance; weights are renormalised.
    pub fn with_tolerance(weights: Vec<f64>, tuples: Vec<UnitaryTuple>, weight_tol: f64) -> Result<Self> {
        if tuples.is_empty() || weights.len() != tuples.len() {
            return Err(Error::InvalidInput(format!(
                "tuple ensemble needs matching non-empty weights/tuples, got {} and {}",
                weights.len(),
                tuples.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("tuple ensemble weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > weight_tol {
            return Err(Error::InvalidInput(format!("tuple ensemble weights sum to {total}, not 1")));
        }
        let (d, k) = (tuples[0].d, tuples[0].k());
        if tuples.iter().any(|t| t.d != d || t.k() != k) {
            return Err(Error::ShapeMismatch("tuples have different (d, k)".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { weights, tuples })
    }

    pub fn single(tuple: UnitaryTuple) -> Self {
        Self {
            weights: vec![1.0],
            tuples: vec![tuple],
        }
    }

    pub fn d(&self) -> usize {
        self.tuples[0].d
    }

    pub fn k(&self) -> usize {
        self.tuples[0].k()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tuples(&self) -> &[UnitaryTuple] {
        &self.tuples
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &UnitaryTuple)> {
        self.weights.iter().copied().zip(&self.tuples)
    }

    /// Every tuple replaced by `U ↦ U ⊕ U`.
    pub fn doubled(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            tuples: self.tuples.iter().map(UnitaryTuple::doubled).collect(),
        }
    }

    /// Every tuple replaced by `U ↦ U ⊕ ... ⊕ U` (`factor` copies).
    pub fn inflated(&self, factor: usize) -> Self {
        Self {
            weights: self.weights.clone(),
            tuples: self.tuples.iter().map(|t| t.inflated(factor)).collect(),
        }
    }

    /// Every tuple replaced by its entrywise adjoint.
    pub fn adjoints(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            tuples: self.tuples.iter().map(UnitaryTuple::adjoints).collect(),
        }
    }

    /// Convex combination `t A + (1 - t) B`.
    pub fn mix(a: &Self, b: &Self, t: f64) -> Result<Self> {
        if a.d() != b.d() || a.k() != b.k() {
            return Err(Error::ShapeMismatch("cannot mix tuple ensembles of different shape".into()));
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
        let tuples = a.tuples.iter().chain(&b.tuples).cloned().collect();
        Ok(Self { weights, tuples })
    }
}

/// Random member of `conv(F_k(d))` as an explicit ensemble: `atoms` tuples of Haar unitaries with
/// flat Dirichlet weights.
pub fn sample_fkd(d: usize, k: usize, atoms: usize, seed: Seed) -> Result<UnitaryTupleEnsemble> {
    if d == 0 || k == 0 || atoms == 0 {
        return Err(Error::InvalidInput(format!("sample_fkd needs positive sizes, got d={d}, k={k}, atoms={atoms}")));
    }
    let mut rng = seed.rng();
    let raw: Vec<f64> = (0..atoms).map(|_| rng.sample::<f64, _>(Exp1).max(1e-12)).collect();
    let total: f64 = raw.iter().sum();
    let tuples = (0..atoms)
        .map(|_| UnitaryTuple::new((0..k).map(|_| haar_unitary(d, &mut rng)).collect()))
        .collect::<Result<Vec<_>>>()?;
    UnitaryTupleEnsemble::with_tolerance(raw.into_iter().map(|w| w / total).collect(), tuples, 1e-12)
}

/// `Σ_m p_m Gram(tuple_m)`.
pub fn gram_average(e: &UnitaryTupleEnsemble) -> ComplexMatrix {
    let k = e.k();
    let mut acc = ComplexMatrix::zeros(k, k);
    for (p, t) in e.iter() {
        acc = &acc + &gram_matrix(t).scale_real(p);
    }
    acc
}

/// An explicit witness that `achieved = Σ p_m Gram(tuple_m)` approximates `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCertificate {
    pub ensemble: UnitaryTupleEnsemble,
    pub achieved: ComplexMatrix,
    pub target: ComplexMatrix,
    pub residual_fro: f64,
    pub residual_max: f64,
}

/// What re-verifying a certificate from scratch found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// `‖gram_average(ensemble) - achieved‖_max`.
    pub achieved_deviation: f64,
    /// Largest unitarity residual over all tuple members.
    pub max_unitarity_residual: f64,
    /// Every per-tuple Gram matrix passed the correlation test.
    pub grams_are_correlations: bool,
    /// Stored residuals agree with `target - achieved`.
    pub residuals_consistent: bool,
    /// `‖target - gram_average(ensemble)‖_F`, recomputed.
    pub recomputed_residual_fro: f64,
}

impl CertificateCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.achieved_deviation <= tol
            && self.max_unitarity_residual <= 1e-9
            && self.grams_are_correlations
            && self.residuals_consistent
    }
}

impl GramCertificate {
    pub fn new(ensemble: UnitaryTupleEnsemble, target: ComplexMatrix) -> Result<Self> {
        if target.rows() != ensemble.k() || target.cols() != ensemble.k() {
            return Err(Error::ShapeMismatch("certificate target does not match tuple length".into()));
        }
        let achieved = gram_average(&ensemble);
        let diff = &target - &achieved;
        Ok(Self {
            residual_fro: diff.fro_norm(),
            residual_max: diff.max_abs(),
            ensemble,
            achieved,
            target,
        })
    }

    pub fn d(&self) -> usize {
        self.ensemble.d()
    }

    pub fn k(&self) -> usize {
        self.ensemble.k()
    }

    /// The same certificate at dimension `factor * d`, every tuple replaced by `U ⊕ ... ⊕ U`.
    /// Gram matrices are unchanged by this, so `achieved` and the residuals are kept as they are
    /// rather than re-summed; [`GramCertificate::verify`] still recomputes them.
    pub fn inflated(&self, factor: usize) -> Self {
        Self {
            ensemble: self.ensemble.inflated(factor),
            ..self.clone()
        }
    }

    /// Recomputes everything from the tuples; nothing stored is trusted.
    pub fn verify(&self) -> Result<CertificateCheck> {
        let recomputed = gram_average(&self.ensemble);
        let achieved_deviation = (&recomputed - &self.achieved).max_abs();
        let mut grams_are_correlations = true;
        let mut max_unitarity_residual: f64 = 0.0;
        for t in self.ensemble.tuples() {
            for u in t.unitaries() {
                max_unitarity_residual = max_unitarity_residual.max(u.unitarity_residual());
            }
            grams_are_correlations &= verify_correlation(&gram_matrix(t))?.ok;
        }
        let diff = &self.target - &recomputed;
        let recomputed_residual_fro = diff.fro_norm();
        let residuals_consistent = (recomputed_residual_fro - self.residual_fro).abs() <= 1e-9
            && (diff.max_abs() - self.residual_max).abs() <= 1e-9;
        Ok(CertificateCheck {
            achieved_deviation,
            max_unitarity_residual,
            grams_are_correlations,
            residuals_consistent,
            recomputed_residual_fro,
        })
    }
}
