use std::fs;
use std::path::Path;

use mufact::channels::{
    d_biaverage, lift_schur, max_basis_deviation, verify_channel, verify_correlation, ChoiMatrix, SchurSymbol,
};
use mufact::factorise::{
    correction_pipeline, gram_average, halmos_dilate, membership_solve, mu_ensemble_from_tuples, premise_norm_lb,
    sample_fkd, tuples_from_ensemble, GramCertificate, SolverParams,
};
use mufact::norms::{schur_cb_norm, schur_norm_psd, superop_norm_lb, AscentParams, BasisTable};
use mufact::numkit::{min_eigenvalue, op_norm, random_correlation};
use mufact::{ComplexMatrix, Seed};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, EXIT_OK, EXIT_RESIDUAL, EXIT_VERIFICATION};
use crate::files::{read_json, write_json, CertificateFile, EnsembleFile, MatrixFile, WEIGHT_TOL};
use crate::report::Report;
use crate::{
    BiaverageArgs, CorrectArgs, DilateArgs, ExtractArgs, FactoriseArgs, GenArgs, GenKind, MuArgs, NormsArgs,
    VerifyArgs, VerifyKind,
};

/// Environment variable capping the worker threads used for solver restarts.
pub const THREADS_VAR: &str = "MUFACT_THREADS";

/// Largest basis deviation accepted when checking a generated ensemble against `δ_d ⊗ S_C`.
const ENSEMBLE_TOL: f64 = 1e-9;

fn read_matrix(report: &mut Report, role: &'static str, path: &Path) -> CliResult<ComplexMatrix> {
    let (file, input): (MatrixFile, _) = read_json(role, path)?;
    report.input(input);
    file.to_matrix()
}

fn read_ensemble(report: &mut Report, role: &'static str, path: &Path) -> CliResult<EnsembleFile> {
    let (file, input) = read_json(role, path)?;
    report.input(input);
    Ok(file)
}

fn read_correlation(report: &mut Report, path: &Path) -> CliResult<SchurSymbol> {
    let c = read_matrix(report, "C", path)?;
    let check = verify_correlation(&c)?;
    if !check.ok {
        return Err(CliError::Malformed(format!(
            "C is not a correlation matrix (min eigenvalue {:.3e}, diagonal deviation {:.3e})",
            check.min_eig, check.max_diag_deviation
        )));
    }
    Ok(SchurSymbol::correlation(c)?)
}

/// Writes `artifact` to `out` when given, otherwise embeds it in the report.
fn emit<T: Serialize>(report: &mut Report, role: &str, out: Option<&Path>, artifact: &T) -> CliResult<()> {
    if let Some(path) = out {
        write_json(path, artifact)?;
        report.output(role, Some(path), Value::Null);
    } else {
        report.output(role, None, serde_json::to_value(artifact)?);
    }
    Ok(())
}

fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Malformed(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn gen(a: &GenArgs, report: &mut Report) -> CliResult<u8> {
    if a.k == 0 || a.d == 0 || a.atoms == 0 {
        return Err(CliError::Malformed("--k, --d and --atoms must be positive".into()));
    }
    let seed = Seed::new(a.seed);
    match a.kind {
        GenKind::Correlation => {
            let c = random_correlation(a.k, seed);
            let check = verify_correlation(&c)?;
            report.result("k", a.k);
            report.result("min_eigenvalue", check.min_eig);
            report.result("max_diag_deviation", check.max_diag_deviation);
            emit(report, "C", a.out.as_deref(), &MatrixFile::from_matrix(&c))?;
        }
        GenKind::Tuple => {
            let e = sample_fkd(a.d, a.k, 1, seed)?;
            let worst = e.tuples()[0]
                .unitaries()
                .iter()
                .map(|u| u.unitarity_residual())
                .fold(0.0, f64::max);
            report.result("d", a.d);
            report.result("k", a.k);
            report.result("max_unitarity_residual", worst);
            emit(report, "tuples", a.out.as_deref(), &EnsembleFile::from_tuples(&e))?;
        }
        GenKind::FkdConvex => {
            let e = sample_fkd(a.d, a.k, a.atoms, seed)?;
            let c = gram_average(&e);
            let cert = GramCertificate::new(e, c.clone())?;
            report.result("d", a.d);
            report.result("k", a.k);
            report.result("atoms", a.atoms);
            report.result("min_eigenvalue", min_eigenvalue(&c)?);
            let (c_path, cert_path) = match &a.out {
                Some(dir) => {
                    fs::create_dir_all(dir)
                        .map_err(|e| CliError::Malformed(format!("cannot create {}: {e}", dir.display())))?;
                    (Some(dir.join("C.json")), Some(dir.join("certificate.json")))
                }
                None => (None, None),
            };
            emit(report, "C", c_path.as_deref(), &MatrixFile::from_matrix(&c))?;
            emit(report, "certificate", cert_path.as_deref(), &CertificateFile::from_certificate(&cert))?;
        }
    }
    Ok(EXIT_OK)
}

pub fn factorise(a: &FactoriseArgs, report: &mut Report) -> CliResult<u8> {
    let c = read_correlation(report, &a.c)?;
    if a.d == 0 || a.restarts == 0 || a.atoms == Some(0) || !(a.tol > 0.0) {
        return Err(CliError::Malformed("--d, --restarts, --atoms and --tol must be positive".into()));
    }
    let params = SolverParams {
        atoms: a.atoms,
        restarts: a.restarts,
        max_iters: a.max_iters,
        tol: a.tol,
        seed: Seed::new(a.seed),
        threads: threads_from_env()?,
    };
    let cert = membership_solve(c.matrix(), a.d, &params)?;
    let passed = cert.residual_fro <= a.tol;
    report.result("d", a.d);
    report.result("k", c.k());
    report.result("atoms_used", cert.ensemble.len());
    report.result("residual_fro", cert.residual_fro);
    report.result("residual_max", cert.residual_max);
    report.result("tol", a.tol);
    report.result("within_tol", passed);
    emit(report, "certificate", a.out.as_deref(), &CertificateFile::from_certificate(&cert))?;
    Ok(if passed { EXIT_OK } else { EXIT_RESIDUAL })
}

pub fn mu(a: &MuArgs, report: &mut Report) -> CliResult<u8> {
    let tuples = read_ensemble(report, "tuples", &a.tuples)?.to_tuples()?;
    let phi = mu_ensemble_from_tuples(&tuples)?;
    let target = SchurSymbol::new(gram_average(&tuples))?;
    let deviation = max_basis_deviation(&phi, &lift_schur(&target, tuples.d()))?;
    let verified = deviation <= ENSEMBLE_TOL;
    report.result("d", tuples.d());
    report.result("k", tuples.k());
    report.result("n", phi.n());
    report.result("terms", phi.len());
    report.result("max_basis_deviation", deviation);
    report.result("verified", verified);
    emit(report, "ensemble", a.out.as_deref(), &EnsembleFile::from_mixed(&phi))?;
    Ok(if verified { EXIT_OK } else { EXIT_VERIFICATION })
}

pub fn extract(a: &ExtractArgs, report: &mut Report) -> CliResult<u8> {
    let phi = read_ensemble(report, "ensemble", &a.ensemble)?.to_mixed()?;
    let c = read_correlation(report, &a.c)?;
    let k = a.k.unwrap_or(c.k());
    let d = match a.d {
        Some(d) => d,
        None if k > 0 && phi.n() % k == 0 => phi.n() / k,
        None => return Err(CliError::Malformed(format!("ensemble size {} is not a multiple of k={k}", phi.n()))),
    };
    let tuples = tuples_from_ensemble(&phi, &c, d, k, a.tol)?;
    let deviation = (&gram_average(&tuples) - c.matrix()).max_abs();
    report.result("d", d);
    report.result("k", k);
    report.result("tuples", tuples.len());
    report.result("gram_average_deviation", deviation);
    emit(report, "tuples", a.out.as_deref(), &EnsembleFile::from_tuples(&tuples))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CorrectionFile {
    c_tilde: MatrixFile,
    c_hat: MatrixFile,
    max_abs_delta: f64,
    epsilon_in: f64,
    bound_ok: bool,
    cross_check: f64,
    premise_norm_lb: Option<f64>,
    certificate: CertificateFile,
}

pub fn correct(a: &CorrectArgs, report: &mut Report) -> CliResult<u8> {
    let c = read_correlation(report, &a.c)?;
    let phi = read_ensemble(report, "phi", &a.phi)?.to_mixed()?;
    let rep = correction_pipeline(&c, &phi, a.epsilon)?;
    let premise = if a.skip_premise {
        None
    } else {
        let params = AscentParams {
            seed: Seed::new(a.seed),
            ..AscentParams::default()
        };
        Some(premise_norm_lb(&c, &phi, &params)?)
    };
    report.result("d", rep.certificate.d() / 2);
    report.result("k", c.k());
    report.result("max_abs_delta", rep.max_abs_delta);
    report.result("epsilon_in", rep.epsilon_in);
    report.result("bound_ok", rep.bound_ok);
    report.result("cross_check", rep.cross_check);
    report.result("premise_norm_lb", premise);
    let file = CorrectionFile {
        c_tilde: MatrixFile::from_matrix(&rep.c_tilde),
        c_hat: MatrixFile::from_matrix(&rep.c_hat),
        max_abs_delta: rep.max_abs_delta,
        epsilon_in: rep.epsilon_in,
        bound_ok: rep.bound_ok,
        cross_check: rep.cross_check,
        premise_norm_lb: premise,
        certificate: CertificateFile::from_certificate(&rep.certificate),
    };
    emit(report, "correction", a.out.as_deref(), &file)?;
    Ok(EXIT_OK)
}

pub fn norms(a: &NormsArgs, report: &mut Report) -> CliResult<u8> {
    let m = read_matrix(report, "A", &a.a)?;
    if a.psd {
        report.result("norm", schur_norm_psd(&m)?);
        report.result("method", "max diagonal");
        return Ok(EXIT_OK);
    }
    let cb = schur_cb_norm(&m)?;
    let params = AscentParams {
        seed: Seed::new(a.seed),
        ..AscentParams::default()
    };
    let lb = superop_norm_lb(&BasisTable::from_map(&SchurSymbol::new(m)?)?, &params)?;
    report.result("cb_lower", cb.lower);
    report.result("cb_upper", cb.upper);
    report.result("cb_method", cb.method);
    report.result("norm_lower_bound", lb);
    Ok(EXIT_OK)
}

pub fn verify(a: &VerifyArgs, report: &mut Report) -> CliResult<u8> {
    let mut all = true;
    let mut checks = Vec::new();
    for path in &a.files {
        let (value, input): (Value, _) = read_json("artifact", path)?;
        report.input(input);
        let (pass, details) = match a.what {
            VerifyKind::Correlation => verify_correlation_file(value)?,
            VerifyKind::Ensemble => verify_ensemble_file(value)?,
            VerifyKind::Certificate => verify_certificate_file(value, a.tol)?,
            VerifyKind::Channel => verify_channel_file(value)?,
        };
        all &= pass;
        checks.push(json!({ "path": path.display().to_string(), "pass": pass, "details": details }));
    }
    report.result("pass", all);
    report.result("checks", checks);
    Ok(if all { EXIT_OK } else { EXIT_VERIFICATION })
}

fn verify_correlation_file(value: Value) -> CliResult<(bool, Value)> {
    let m = serde_json::from_value::<MatrixFile>(value)?.to_matrix()?;
    let check = verify_correlation(&m)?;
    Ok((
        check.ok,
        json!({
            "hermitian_residual": check.hermitian_residual,
            "min_eigenvalue": check.min_eig,
            "max_diag_deviation": check.max_diag_deviation,
        }),
    ))
}

fn verify_ensemble_file(value: Value) -> CliResult<(bool, Value)> {
    let file: EnsembleFile = serde_json::from_value(value)?;
    let mats = file.matrices()?;
    let weights = file.weights();
    let total: f64 = weights.iter().sum();
    let positive = weights.iter().all(|&w| w > 0.0 && w.is_finite());
    let worst = mats.iter().map(|u| u.unitarity_residual()).fold(0.0, f64::max);
    let pass = positive && (total - 1.0).abs() <= WEIGHT_TOL && worst <= ENSEMBLE_TOL;
    Ok((
        pass,
        json!({ "weights_positive": positive, "weight_sum": total, "max_unitarity_residual": worst }),
    ))
}

fn verify_certificate_file(value: Value, tol: f64) -> CliResult<(bool, Value)> {
    // correction reports carry their certificate under "certificate"
    let inner = match value {
        Value::Object(mut o) if o.contains_key("certificate") => o.remove("certificate").expect("key present"),
        other => other,
    };
    let cert = serde_json::from_value::<CertificateFile>(inner)?.to_certificate()?;
    let check = cert.verify()?;
    Ok((
        check.passes(tol),
        json!({
            "d": cert.d(),
            "k": cert.k(),
            "achieved_deviation": check.achieved_deviation,
            "max_unitarity_residual": check.max_unitarity_residual,
            "grams_are_correlations": check.grams_are_correlations,
            "residuals_consistent": check.residuals_consistent,
            "residual_fro": check.recomputed_residual_fro,
        }),
    ))
}

fn verify_channel_file(value: Value) -> CliResult<(bool, Value)> {
    let check = if value.get("entries").is_some() {
        let m = serde_json::from_value::<MatrixFile>(value)?.to_matrix()?;
        verify_channel(&ChoiMatrix::from_square(m)?)?
    } else {
        verify_channel(&serde_json::from_value::<EnsembleFile>(value)?.to_mixed()?)?
    };
    Ok((
        check.all(),
        json!({
            "cp": check.cp,
            "tp": check.tp,
            "unital": check.unital,
            "min_choi_eigenvalue": check.min_choi_eigenvalue,
            "tp_residual": check.tp_residual,
            "unital_residual": check.unital_residual,
        }),
    ))
}

pub fn biaverage(a: &BiaverageArgs, report: &mut Report) -> CliResult<u8> {
    let choi = ChoiMatrix::from_square(read_matrix(report, "choi", &a.choi)?)?;
    let b = d_biaverage(&choi)?;
    report.result("k", b.k());
    report.result("min_eigenvalue", min_eigenvalue(&b.matrix().hermitian_part())?);
    emit(report, "symbol", a.out.as_deref(), &MatrixFile::from_matrix(b.matrix()))?;
    Ok(EXIT_OK)
}

pub fn dilate(a: &DilateArgs, report: &mut Report) -> CliResult<u8> {
    let x = read_matrix(report, "X", &a.x)?;
    let w = halmos_dilate(&x)?;
    report.result("d", x.rows());
    report.result("norm", op_norm(&x)?);
    report.result("unitarity_residual", w.unitarity_residual());
    emit(report, "dilation", a.out.as_deref(), &MatrixFile::from_matrix(&w))?;
    Ok(EXIT_OK)
}

