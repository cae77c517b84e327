//! Both directions of the correspondence between convex combinations of Gram matrices and
//! mixed-unitary realisations of `δ_d ⊗ S_C`.

use super::tuples::{gram_average, UnitaryTuple, UnitaryTupleEnsemble};
use crate::channels::{lift_schur, max_basis_deviation, weyl_unitaries, MixedUnitaryEnsemble, SchurSymbol};
use crate::error::{Error, Result};
use crate::numkit::{ComplexMatrix, STRUCT_TOL};

/// Mixed unitary ensemble on `M_d ⊗ M_k` realising `δ_d ⊗ S_C` for `C = gram_average(E)`.
///
/// Each tuple contributes the `d^4` block-diagonal unitaries `⊕_i W_{l'} U_i^* W_l` with weight
/// `p / d^4`, where `W_l` runs over the Weyl-Heisenberg unitaries. The adjoint moves the
/// `tr_d(U_i U_j^*)` symbol of the sandwich to the `tr_d(U_i^* U_j)` Gram convention.
pub fn mu_ensemble_from_tuples(e: &UnitaryTupleEnsemble) -> Result<MixedUnitaryEnsemble> {
    let d = e.d();
    for t in e.tuples() {
        for u in t.unitaries() {
            let residual = u.unitarity_residual();
            if residual > STRUCT_TOL {
                return Err(Error::NotUnitary { residual });
            }
        }
    }
    let weyl = weyl_unitaries(d);
    let d4 = (d * d * d * d) as f64;
    let mut weights = Vec::with_capacity(e.len() * weyl.len() * weyl.len());
    let mut unitaries = Vec::with_capacity(weights.capacity());
    for (p, tuple) in e.iter() {
        let adj = tuple.adjoints();
        for wl in &weyl {
            for wl2 in &weyl {
                let blocks: Vec<ComplexMatrix> = adj.unitaries().iter().map(|u| &(wl2 * u) * wl).collect();
                weights.push(p / d4);
                unitaries.push(ComplexMatrix::direct_sum(&blocks));
            }
        }
    }
    MixedUnitaryEnsemble::with_tolerance(weights, unitaries, 1e-9)
}

/// Recovers a unitary tuple ensemble from a mixed unitary realisation of `δ_d ⊗ S_C`.
///
/// The ensemble's action is first checked against `δ_d ⊗ S_C` on every matrix unit; then each
/// member must be block diagonal with unitary diagonal blocks `V_{l,i,i}`, and the tuples
/// `(V_{l,1,1}^*, ..., V_{l,k,k}^*)` must reproduce `C` as their weighted Gram average.
pub fn tuples_from_ensemble(
    e: &MixedUnitaryEnsemble,
    c: &SchurSymbol,
    d: usize,
    k: usize,
    tol: f64,
) -> Result<UnitaryTupleEnsemble> {
    if c.k() != k || e.n() != d * k {
        return Err(Error::ShapeMismatch(format!(
            "ensemble on M_{} and symbol of size {} do not match d={d}, k={k}",
            e.n(),
            c.k()
        )));
    }
    let residual = max_basis_deviation(e, &lift_schur(c, d))?;
    if residual > tol {
        return Err(Error::NotAFactorisation { residual });
    }
    let mut tuples = Vec::with_capacity(e.len());
    for (index, v) in e.unitaries().iter().enumerate() {
        let mut off: f64 = 0.0;
        for s in 0..k {
            for t in 0..k {
                if s != t {
                    off = off.max(v.block(s * d, t * d, d, d).fro_norm());
                }
            }
        }
        if off > tol {
            return Err(Error::NotBlockDiagonal { index, residual: off });
        }
        let blocks: Vec<ComplexMatrix> = (0..k).map(|i| v.block(i * d, i * d, d, d).adjoint()).collect();
        tuples.push(UnitaryTuple::with_tolerance(blocks, tol)?);
    }
    let out = UnitaryTupleEnsemble::with_tolerance(e.weights().to_vec(), tuples, 1e-9)?;
    let residual = (&gram_average(&out) - c.matrix()).max_abs();
    if residual > tol {
        return Err(Error::NotAFactorisation { residual });
    }
    Ok(out)
}
