use super::{block_trace, embed_identity, weyl_unitaries, ChoiMatrix, IdentityMap, LinearMap, MixedUnitaryEnsemble};
use crate::error::{Error, Result};
use crate::numkit::ComplexMatrix;

/// `δ_d ⊗ T` on `M_d ⊗ M_k` for a map `T` on `M_k`.
#[derive(Debug, Clone)]
pub struct DepolarizedTensor<T> {
    pub d: usize,
    pub inner: T,
}

impl<T: LinearMap> LinearMap for DepolarizedTensor<T> {
    fn dim_in(&self) -> usize {
        self.d * self.inner.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.d * self.inner.dim_out()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        let y = block_trace(x, self.d, self.inner.dim_in())?;
        Ok(embed_identity(&self.inner.apply(&y)?, self.d))
    }
}

/// `Δ = δ_d ⊗ id_{M_k}`.
pub fn delta_map(d: usize, k: usize) -> DepolarizedTensor<IdentityMap> {
    DepolarizedTensor {
        d,
        inner: IdentityMap(k),
    }
}

/// The map `T` on `M_k` with `Δ ∘ Φ ∘ Δ = δ_d ⊗ T`, given by
/// `T(B) = (tr_d ⊗ id)(Δ Φ Δ (I_d ⊗ B))` and returned as its Choi matrix.
pub fn delta_compress(phi: &impl LinearMap, d: usize, k: usize) -> Result<ChoiMatrix> {
    if phi.dim_in() != d * k || phi.dim_out() != d * k {
        return Err(Error::ShapeMismatch(format!(
            "Δ-compression with d={d}, k={k} needs a map on M_{}",
            d * k
        )));
    }
    let delta = delta_map(d, k);
    let mut choi = ComplexMatrix::zeros(k * k, k * k);
    for i in 0..k {
        for j in 0..k {
            let input = delta.apply(&embed_identity(&ComplexMatrix::unit(k, k, i, j), d))?;
            let out = delta.apply(&phi.apply(&input)?)?;
            choi.set_block(i * k, j * k, &block_trace(&out, d, k)?);
        }
    }
    ChoiMatrix::from_matrix(k, k, choi)
}

/// [`delta_compress`] for a mixed unitary `Φ`, also returning the ensemble of `δ_d ⊗ T`:
/// the `d^2 · M · d^2` products `(I_k ⊗ W_b) U_l (I_k ⊗ W_a)` with weights `p_l / d^4`.
pub fn delta_compress_ensemble(
    phi: &MixedUnitaryEnsemble,
    d: usize,
    k: usize,
) -> Result<(ChoiMatrix, MixedUnitaryEnsemble)> {
    let t = delta_compress(phi, d, k)?;
    let w = 1.0 / (d * d) as f64;
    let lifted: Vec<ComplexMatrix> = weyl_unitaries(d)
        .iter()
        .map(|wu| ComplexMatrix::identity(k).kron(wu))
        .collect();
    let delta = MixedUnitaryEnsemble::from_parts_unchecked(d * k, vec![w; d * d], lifted);
    let inner = MixedUnitaryEnsemble::compose(phi, &delta)?;
    let ens = MixedUnitaryEnsemble::compose(&delta, &inner)?;
    Ok((t, ens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing_ensemble, max_basis_deviation, verify_channel, SchurSymbol};
    use crate::numkit::{random_haar_unitary, Seed};

    #[test]
    fn identity_compresses_to_identity() {
        let (d, k) = (2, 3);
        let t = delta_compress(&IdentityMap(d * k), d, k).unwrap();
        assert!(max_basis_deviation(&t, &IdentityMap(k)).unwrap() < 1e-14);
    }

    #[test]
    fn full_depolarising_compresses_to_depolarising() {
        let (d, k) = (2, 3);
        let t = delta_compress(&depolarizing_ensemble(d * k), d, k).unwrap();
        assert!(max_basis_deviation(&t, &depolarizing_ensemble(k)).unwrap() < 1e-12);
    }

    #[test]
    fn block_diagonal_conjugation_compresses_to_schur() {
        let (d, k) = (2, 3);
        let us: Vec<ComplexMatrix> = (0..k).map(|i| random_haar_unitary(d, Seed::new(i as u64))).collect();
        let v = ComplexMatrix::direct_sum(&us);
        let phi = MixedUnitaryEnsemble::new(vec![1.0], vec![v]).unwrap();
        let t = delta_compress(&phi, d, k).unwrap();
        let c = ComplexMatrix::from_fn(k, k, |i, j| us[i].mul_adjoint(&us[j]).normalized_trace());
        let s = SchurSymbol::new(c).unwrap();
        assert!(max_basis_deviation(&t, &s).unwrap() < 1e-12);
    }

    #[test]
    fn composed_ensemble_realises_compression() {
        let (d, k) = (2, 2);
        let phi = MixedUnitaryEnsemble::new(
            vec![0.4, 0.6],
            vec![random_haar_unitary(4, Seed::new(5)), random_haar_unitary(4, Seed::new(6))],
        )
        .unwrap();
        let (t, ens) = delta_compress_ensemble(&phi, d, k).unwrap();
        assert_eq!(ens.len(), d * d * 2 * d * d);
        let total: f64 = ens.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let lifted = DepolarizedTensor { d, inner: t.clone() };
        assert!(max_basis_deviation(&ens, &lifted).unwrap() < 1e-12);
        assert!(verify_channel(&t).unwrap().all());
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            delta_compress(&IdentityMap(5), 2, 2),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
