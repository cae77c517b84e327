//! Unitary tuples, their Gram matrices, and the passage between convex combinations of Gram
//! matrices and mixed unitary realisations of `δ_d ⊗ S_C`; hull membership search, the
//! dilation-based correction of approximate realisations, and distance bounds.

mod construction;
mod correction;
mod dilation;
mod distance;
mod solver;
mod tuples;

pub use construction::{mu_ensemble_from_tuples, tuples_from_ensemble};
pub use correction::{correction_pipeline, premise_norm_lb, CorrectionReport, CROSS_CHECK_TOL};
pub use dilation::{halmos_dilate, NORM_SLACK};
pub use distance::{dist_upper_bound, dist_upper_bound_from, DistanceBound};
pub use solver::{membership_solve, membership_solve_traced, SolveTrace, SolverParams};
pub use tuples::{gram_average, gram_matrix, sample_fkd, CertificateCheck, GramCertificate, UnitaryTuple, UnitaryTupleEnsemble};
