//! End-to-end runs: solve, realise, extract, correct.

use mufact::channels::{lift_schur, max_basis_deviation, MixedUnitaryEnsemble, SchurSymbol};
use mufact::factorise::{
    correction_pipeline, dist_upper_bound, gram_average, membership_solve, mu_ensemble_from_tuples, premise_norm_lb,
    sample_fkd, tuples_from_ensemble, SolverParams,
};
use mufact::norms::AscentParams;
use mufact::numkit::random_correlation;
use mufact::Seed;

#[test]
fn planted_instance_round_trips() {
    let (d, k) = (2, 3);
    let planted = sample_fkd(d, k, 3, Seed::new(31)).unwrap();
    let c = gram_average(&planted);
    let params = SolverParams {
        tol: 1e-9,
        seed: Seed::new(4),
        ..SolverParams::default()
    };
    let cert = membership_solve(&c, d, &params).unwrap();
    assert!(cert.residual_fro <= 1e-6, "residual {}", cert.residual_fro);
    assert!(cert.verify().unwrap().passes(1e-10));

    let achieved = SchurSymbol::new(cert.achieved.clone()).unwrap();
    let phi = mu_ensemble_from_tuples(&cert.ensemble).unwrap();
    assert!(max_basis_deviation(&phi, &lift_schur(&achieved, d)).unwrap() <= 1e-10);
    let back = tuples_from_ensemble(&phi, &achieved, d, k, 1e-9).unwrap();
    assert!((&gram_average(&back) - &cert.achieved).max_abs() <= 1e-9);

    let report = correction_pipeline(&achieved, &phi, 1e-8).unwrap();
    assert!(report.max_abs_delta <= 1e-9);
    assert!(report.bound_ok);
    assert_eq!(report.certificate.d(), 2 * d);
    assert!(report.certificate.verify().unwrap().passes(1e-10));
}

#[test]
fn convex_perturbation_is_corrected_within_twice_epsilon() {
    let (d, k, t) = (2, 3, 0.1);
    let e0 = sample_fkd(d, k, 2, Seed::new(40)).unwrap();
    let e1 = sample_fkd(d, k, 2, Seed::new(41)).unwrap();
    let c = SchurSymbol::new(gram_average(&e0)).unwrap();
    let phi0 = mu_ensemble_from_tuples(&e0).unwrap();
    let phi1 = mu_ensemble_from_tuples(&e1).unwrap();
    let phi = MixedUnitaryEnsemble::mix(&phi1, &phi0, t).unwrap();

    // δ_d ⊗ S_C - Φ = t (Φ_0 - Φ_1), and both are unital channels of norm one
    let eps = 2.0 * t;
    let lb = premise_norm_lb(&c, &phi, &AscentParams::default()).unwrap();
    assert!(lb <= eps + 1e-9, "lower bound {lb} exceeds {eps}");

    let report = correction_pipeline(&c, &phi, eps).unwrap();
    assert!(report.bound_ok);
    assert!(report.max_abs_delta < 2.0 * eps);
    assert!(report.cross_check <= 1e-9);
    assert!(report.certificate.verify().unwrap().passes(1e-10));
}

#[test]
fn distance_bound_dominates_entrywise_gap() {
    // ‖S_A‖ >= max |a_ij| since S_A(E_ij) = a_ij E_ij
    let c = SchurSymbol::new(random_correlation(4, Seed::new(2))).unwrap();
    let params = SolverParams {
        restarts: 4,
        max_iters: 100,
        ..SolverParams::default()
    };
    for d in [1, 2] {
        let b = dist_upper_bound(&c, d, &params).unwrap();
        assert!(b.bound + 1e-12 >= b.certificate.residual_max, "d={d}");
        assert!(b.bound <= b.psd_split + 1e-15 && b.bound <= b.cb.upper + 1e-15);
    }
}
