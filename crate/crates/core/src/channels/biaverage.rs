use super::{choi_of, LinearMap, SchurSymbol};
use crate::error::{Error, Result};
use crate::numkit::ComplexMatrix;

/// Default dimension cap for [`biaverage_pm_oracle`]; cost grows like `4^k k^2` map evaluations.
pub const PM_ORACLE_DEFAULT_LIMIT: usize = 8;
const PM_ORACLE_HARD_LIMIT: usize = 12;

/// Two-sided average of `T` over the diagonal unitary group.
///
/// The result is the Schur multiplier whose symbol `b_{i,j} = [T(E_{i,j})]_{i,j}` is the
/// compression of the Choi matrix to `span{e_i ⊗ e_i}`, hence PSD whenever `T` is CP.
pub fn d_biaverage(t: &impl LinearMap) -> Result<SchurSymbol> {
    let k = square_dim(t)?;
    let choi = choi_of(t)?;
    let min_eig = choi.min_eigenvalue()?;
    if !choi.is_cp()? {
        return Err(Error::NotCp { min_eig });
    }
    let b = ComplexMatrix::from_fn(k, k, |i, j| choi.matrix()[(i * k + i, j * k + j)]);
    SchurSymbol::new(b)
}

/// Brute-force biaverage over the `2^k` diagonal sign matrices on each side, evaluated on
/// every matrix unit. Independent of the Choi-compression route in [`d_biaverage`].
pub fn biaverage_pm_oracle(t: &impl LinearMap) -> Result<SchurSymbol> {
    biaverage_pm_oracle_with_limit(t, PM_ORACLE_DEFAULT_LIMIT)
}

pub fn biaverage_pm_oracle_with_limit(t: &impl LinearMap, limit: usize) -> Result<SchurSymbol> {
    let k = square_dim(t)?;
    let limit = limit.min(PM_ORACLE_HARD_LIMIT);
    if k > limit {
        return Err(Error::DimensionTooLarge { dim: k, limit });
    }
    let signs: Vec<Vec<f64>> = (0..1usize << k)
        .map(|mask| (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect();
    let norm = 1.0 / (signs.len() * signs.len()) as f64;
    let mut b = ComplexMatrix::zeros(k, k);
    for a in 0..k {
        for c in 0..k {
            let unit = ComplexMatrix::unit(k, k, a, c);
            let mut acc = ComplexMatrix::zeros(k, k);
            for s1 in &signs {
                for s2 in &signs {
                    // D1 E D2 with D real and diagonal, so D^* = D
                    let input = ComplexMatrix::from_fn(k, k, |i, j| unit[(i, j)] * (s1[i] * s2[j]));
                    let img = t.apply(&input)?;
                    let term = ComplexMatrix::from_fn(k, k, |i, j| img[(i, j)] * (s1[i] * s2[j]));
                    acc = &acc + &term;
                }
            }
            b[(a, c)] = acc[(a, c)] * norm;
        }
    }
    SchurSymbol::new(b)
}

fn square_dim(t: &impl LinearMap) -> Result<usize> {
    if t.dim_in() != t.dim_out() {
        return Err(Error::ShapeMismatch("biaverage needs a map M_k -> M_k".into()));
    }
    Ok(t.dim_in())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing_ensemble, IdentityMap, KrausChannel, MixedUnitaryEnsemble};
    use crate::numkit::random::{random_complex_gaussian, random_phase};
    use crate::numkit::{is_psd, Seed};
    use num_complex::Complex64;

    #[test]
    fn identity_gives_all_ones() {
        let b = d_biaverage(&IdentityMap(3)).unwrap();
        assert_eq!(b.matrix(), &ComplexMatrix::ones(3));
        let o = biaverage_pm_oracle(&IdentityMap(2)).unwrap();
        assert_eq!(o.matrix(), &ComplexMatrix::ones(2));
    }

    #[test]
    fn depolarising_gives_scaled_identity() {
        for k in [2, 3] {
            let want = ComplexMatrix::identity(k).scale_real(1.0 / k as f64);
            let b = d_biaverage(&depolarizing_ensemble(k)).unwrap();
            assert!((b.matrix() - &want).fro_norm() < 1e-14);
            let o = biaverage_pm_oracle(&depolarizing_ensemble(k)).unwrap();
            assert!((o.matrix() - &want).fro_norm() < 1e-14);
        }
    }

    #[test]
    fn diagonal_unitary_gives_rank_one_correlation() {
        let mut rng = Seed::new(3).rng();
        let z: Vec<Complex64> = (0..4).map(|_| random_phase(&mut rng)).collect();
        let e = MixedUnitaryEnsemble::new(vec![1.0], vec![ComplexMatrix::diag(&z)]).unwrap();
        let b = d_biaverage(&e).unwrap();
        let want = ComplexMatrix::from_fn(4, 4, |i, j| z[i] * z[j].conj());
        assert!((b.matrix() - &want).fro_norm() < 1e-14);
    }

    #[test]
    fn oracle_agrees_on_random_cp_map() {
        let ops: Vec<ComplexMatrix> = (0..3).map(|s| random_complex_gaussian(3, 3, Seed::new(70 + s))).collect();
        let t = KrausChannel::new(ops).unwrap();
        let b = d_biaverage(&t).unwrap();
        let o = biaverage_pm_oracle(&t).unwrap();
        assert!((b.matrix() - o.matrix()).fro_norm() <= 1e-10);
        assert!(is_psd(b.matrix(), 1e-10).unwrap());
    }

    #[test]
    fn rejects_non_cp() {
        // transpose map is positive but not completely positive
        struct Transpose;
        impl LinearMap for Transpose {
            fn dim_in(&self) -> usize {
                2
            }
            fn dim_out(&self) -> usize {
                2
            }
            fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
                Ok(x.transpose())
            }
        }
        assert!(matches!(d_biaverage(&Transpose), Err(Error::NotCp { .. })));
    }

    #[test]
    fn oracle_dimension_limit() {
        assert!(matches!(
            biaverage_pm_oracle(&IdentityMap(9)),
            Err(Error::DimensionTooLarge { dim: 9, limit: 8 })
        ));
    }
}
