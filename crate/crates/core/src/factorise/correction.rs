use num_complex::Complex64;

use super::dilation::halmos_dilate;
use super::tuples::{GramCertificate, UnitaryTuple, UnitaryTupleEnsemble};
use crate::channels::{d_biaverage, delta_compress, lift_schur, MapDifference, MixedUnitaryEnsemble, SchurSymbol};
use crate::error::{Error, Result};
use crate::norms::{superop_norm_lb, AscentParams, BasisTable};
use crate::numkit::ComplexMatrix;

/// Largest allowed disagreement between the two routes to `C̃`.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Result of [`correction_pipeline`].
#[derive(Debug, Clone)]
pub struct CorrectionReport {
    pub c: SchurSymbol,
    /// `Σ_l t_l tr_d(X_{l,i} X_{l,j}^*)` from the diagonal blocks `X_{l,i}` of the ensemble.
    pub c_tilde: ComplexMatrix,
    /// Gram average of the dilated tuples, a member of the convex hull at dimension `2d`.
    pub c_hat: ComplexMatrix,
    /// Tuples `(W_{l,i}^*)_i` at dimension `2d` with target `C`; its achieved matrix is `Ĉ`.
    pub certificate: GramCertificate,
    pub max_abs_delta: f64,
    pub epsilon_in: f64,
    /// `max_abs_delta < 2 epsilon_in`.
    pub bound_ok: bool,
    /// `max |C̃ - B|` against the symbol of the Δ-compressed, biaveraged ensemble.
    pub cross_check: f64,
}

/// Corrects an approximate mixed unitary realisation `Φ` of `δ_d ⊗ S_C` into a certified
/// `Ĉ ∈ conv(F_k(2d))` close to `C`.
///
/// The diagonal blocks `X_{l,i}` of each ensemble unitary are contractions. Their Gram-type
/// average `C̃` is the symbol of the diagonal biaverage of `Δ Φ Δ`, which is checked
/// independently. Each block is replaced by its Halmos dilation `W_{l,i}`, and the tuples
/// `(W_{l,i})_i` give `Ĉ`. If `‖δ_d ⊗ S_C - Φ‖ < ε` then every entry of `C - Ĉ` is below `2ε`.
pub fn correction_pipeline(c: &SchurSymbol, phi: &MixedUnitaryEnsemble, epsilon_in: f64) -> Result<CorrectionReport> {
    let k = c.k();
    let n = phi.n();
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::ShapeMismatch(format!("ensemble on M_{n} does not split into {k} blocks")));
    }
    if !(epsilon_in > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon_in}")));
    }
    let d = n / k;

    let mut c_tilde = ComplexMatrix::zeros(k, k);
    let mut tuples = Vec::with_capacity(phi.len());
    for (t, u) in phi.iter() {
        let blocks: Vec<ComplexMatrix> = (0..k).map(|i| u.block(i * d, i * d, d, d)).collect();
        accumulate_gram(&mut c_tilde, &blocks, t, d);
        let dilated = blocks.iter().map(halmos_dilate).collect::<Result<Vec<_>>>()?;
        // stored as adjoints so that tr(U_i^* U_j) = tr(W_i W_j^*)
        let adj = dilated.iter().map(|w| w.adjoint()).collect();
        tuples.push(UnitaryTuple::with_tolerance(adj, 1e-9)?);
    }

    let ensemble = UnitaryTupleEnsemble::with_tolerance(phi.weights().to_vec(), tuples, 1e-9)?;
    let certificate = GramCertificate::new(ensemble, c.matrix().clone())?;
    let c_hat = certificate.achieved.clone();

    let compressed = delta_compress(phi, d, k)?;
    let b = d_biaverage(&compressed)?;
    let cross_check = (&c_tilde - b.matrix()).max_abs();
    if cross_check > CROSS_CHECK_TOL {
        return Err(Error::InvalidInput(format!(
            "diagonal-block average disagrees with the compressed biaverage by {cross_check:.3e}"
        )));
    }

    let max_abs_delta = (c.matrix() - &c_hat).max_abs();
    Ok(CorrectionReport {
        c: c.clone(),
        c_tilde,
        c_hat,
        certificate,
        max_abs_delta,
        epsilon_in,
        bound_ok: max_abs_delta < 2.0 * epsilon_in,
        cross_check,
    })
}

/// Heuristic lower bound on `‖δ_d ⊗ S_C - Φ‖`, reported next to the caller's `ε`.
pub fn premise_norm_lb(c: &SchurSymbol, phi: &MixedUnitaryEnsemble, params: &AscentParams) -> Result<f64> {
    let k = c.k();
    if k == 0 || !phi.n().is_multiple_of(k) {
        return Err(Error::ShapeMismatch("ensemble and symbol sizes do not match".into()));
    }
    let lifted = lift_schur(c, phi.n() / k);
    let table = BasisTable::from_map(&MapDifference::new(&lifted, phi)?)?;
    superop_norm_lb(&table, params)
}

/// `acc_ij += t tr_d(X_i X_j^*)`.
fn accumulate_gram(acc: &mut ComplexMatrix, blocks: &[ComplexMatrix], t: f64, d: usize) {
    let k = blocks.len();
    let scale = t / d as f64;
    for i in 0..k {
        for j in 0..k {
            // tr(X_i X_j^*) = <X_j, X_i>
            let v: Complex64 = blocks[j].inner(&blocks[i]);
            acc[(i, j)] += v * scale;
        }
    }
}
