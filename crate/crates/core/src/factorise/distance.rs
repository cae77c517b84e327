use super::solver::{membership_solve, SolverParams};
use super::tuples::GramCertificate;
use crate::channels::SchurSymbol;
use crate::error::{Error, Result};
use crate::norms::{schur_cb_norm, NormEstimate};
use crate::numkit::{herm_eig, ComplexMatrix};

/// Upper bound on the cb-distance from `δ_d ⊗ S_C` to the mixed unitary channels on `M_{dk}`.
#[derive(Debug, Clone)]
pub struct DistanceBound {
    /// Certificate whose Gram average `C'` was used.
    pub certificate: GramCertificate,
    /// cb-norm bracket of `S_{C - C'}`.
    pub cb: NormEstimate,
    /// `max diag P + max diag N` for the Jordan split `C - C' = P - N`.
    pub psd_split: f64,
    /// `min(cb.upper, psd_split)`.
    pub bound: f64,
}

/// Runs [`membership_solve`] and bounds `‖δ_d ⊗ S_C - δ_d ⊗ S_{C'}‖_cb = ‖S_{C - C'}‖_cb`.
///
/// `δ_d ⊗ S_{C'}` is mixed unitary because `C'` is a certified Gram average.
pub fn dist_upper_bound(c: &SchurSymbol, d: usize, params: &SolverParams) -> Result<DistanceBound> {
    dist_upper_bound_from(c, d, params, None)
}

/// [`dist_upper_bound`] that also considers a certificate `warm` found at a dimension dividing `d`,
/// inflated block diagonally by `U ↦ U ⊕ ... ⊕ U`. The smaller bound is reported, so bounds computed along a chain
/// `d, 2d, 4d, ...` with the previous certificate passed in never increase.
pub fn dist_upper_bound_from(
    c: &SchurSymbol,
    d: usize,
    params: &SolverParams,
    warm: Option<&GramCertificate>,
) -> Result<DistanceBound> {
    let target = c.matrix();
    let mut best = bound_for(membership_solve(target, d, params)?)?;
    if let Some(w) = warm {
        if w.k() != c.k() || w.d() == 0 || !d.is_multiple_of(w.d()) {
            return Err(Error::ShapeMismatch(format!(
                "warm certificate with d={}, k={} does not fit d={d}, k={}",
                w.d(),
                w.k(),
                c.k()
            )));
        }
        let lifted = if w.target == *target {
            w.inflated(d / w.d())
        } else {
            GramCertificate::new(w.ensemble.inflated(d / w.d()), target.clone())?
        };
        let other = bound_for(lifted)?;
        if other.bound <= best.bound {
            best = other;
        }
    }
    Ok(best)
}

fn bound_for(certificate: GramCertificate) -> Result<DistanceBound> {
    let diff = &certificate.target - &certificate.achieved;
    let cb = schur_cb_norm(&diff)?;
    let psd_split = psd_split_bound(&diff)?;
    let bound = cb.upper.min(psd_split);
    Ok(DistanceBound {
        certificate,
        cb,
        psd_split,
        bound,
    })
}

/// `‖S_P‖ + ‖S_N‖ = max diag P + max diag N` for the positive and negative parts of a Hermitian `Y`.
fn psd_split_bound(y: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(&y.hermitian_part())?;
    let pos = eig.reconstruct_with(|l| l.max(0.0));
    let neg = eig.reconstruct_with(|l| (-l).max(0.0));
    let top = |m: &ComplexMatrix| m.diagonal().iter().fold(0.0f64, |acc, z| acc.max(z.re));
    Ok(top(&pos) + top(&neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorise::{gram_matrix, UnitaryTuple};
    use crate::numkit::random::random_phase;
    use crate::numkit::{random_correlation, random_haar_unitary, Seed};
    use crate::Complex64;

    fn quick() -> SolverParams {
        SolverParams {
            restarts: 4,
            ..SolverParams::default()
        }
    }

    #[test]
    fn member_of_fkd_has_tiny_bound() {
        let t = UnitaryTuple::new((0..3).map(|i| random_haar_unitary(2, Seed::new(60 + i))).collect()).unwrap();
        let c = SchurSymbol::correlation(gram_matrix(&t)).unwrap();
        let b = dist_upper_bound(&c, 2, &quick()).unwrap();
        assert!(b.bound <= 1e-6, "{b:?}");
    }

    #[test]
    fn identity_with_d_equal_k() {
        let c = SchurSymbol::correlation(ComplexMatrix::identity(3)).unwrap();
        let b = dist_upper_bound(&c, 3, &quick()).unwrap();
        assert!(b.bound <= 1e-6, "{}", b.bound);
    }

    #[test]
    fn rank_one_at_any_dimension() {
        let mut rng = Seed::new(5).rng();
        let z: Vec<Complex64> = (0..4).map(|_| random_phase(&mut rng)).collect();
        let c = SchurSymbol::correlation(ComplexMatrix::from_fn(4, 4, |i, j| z[i] * z[j].conj())).unwrap();
        for d in [1, 3] {
            let b = dist_upper_bound(&c, d, &quick()).unwrap();
            assert!(b.bound <= 1e-6, "d={d}: {}", b.bound);
        }
    }

    #[test]
    fn psd_split_of_definite_matrices() {
        let y = ComplexMatrix::diag_real(&[0.5, -0.25]);
        assert!((psd_split_bound(&y).unwrap() - 0.75).abs() < 1e-15);
        let p = random_correlation(3, Seed::new(2));
        assert!((psd_split_bound(&p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_keeps_bounds_monotone() {
        let c = SchurSymbol::correlation(random_correlation(4, Seed::new(12))).unwrap();
        let params = SolverParams {
            restarts: 2,
            max_iters: 30,
            ..SolverParams::default()
        };
        let first = dist_upper_bound(&c, 1, &params).unwrap();
        let second = dist_upper_bound_from(&c, 2, &params, Some(&first.certificate)).unwrap();
        let third = dist_upper_bound_from(&c, 4, &params, Some(&second.certificate)).unwrap();
        assert!(second.bound <= first.bound && third.bound <= second.bound);
        assert!(first.bound <= first.psd_split + 1e-12 && first.bound <= first.cb.upper + 1e-12);
    }
}
