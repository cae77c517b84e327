use std::path::{Path, PathBuf};
use std::process::Command;

use mufact::{Complex64, ComplexMatrix};
use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    report: Value,
    stderr: String,
}

fn mufact(args: &[&str]) -> Run {
    mufact_env(args, &[])
}

fn mufact_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mufact"));
    cmd.args(args).env_remove("MUFACT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().expect("exit code"),
        report: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string(v).unwrap()).unwrap();
}

fn matrix(v: &Value) -> ComplexMatrix {
    let rows = v["rows"].as_u64().unwrap() as usize;
    let cols = v["cols"].as_u64().unwrap() as usize;
    let data = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| Complex64::new(e[0].as_f64().unwrap(), e[1].as_f64().unwrap()))
        .collect();
    ComplexMatrix::from_row_major(rows, cols, data).unwrap()
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    json!({
        "rows": m.rows(),
        "cols": m.cols(),
        "entries": m.data().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
    })
}

/// `Σ_m p_m (tr(U_i^* U_j) / d)` with plain loops, independent of the library's Gram code.
fn gram_average_of(ensemble: &Value) -> ComplexMatrix {
    let d = ensemble["d"].as_u64().unwrap() as usize;
    let k = ensemble["k"].as_u64().unwrap() as usize;
    let mut acc = ComplexMatrix::zeros(k, k);
    for (w, tuple) in ensemble["weights"].as_array().unwrap().iter().zip(ensemble["tuples"].as_array().unwrap()) {
        let us: Vec<ComplexMatrix> = tuple.as_array().unwrap().iter().map(matrix).collect();
        for i in 0..k {
            for j in 0..k {
                let mut t = Complex64::new(0.0, 0.0);
                for a in 0..d {
                    for b in 0..d {
                        t += us[i][(a, b)].conj() * us[j][(a, b)];
                    }
                }
                acc[(i, j)] += t * (w.as_f64().unwrap() / d as f64);
            }
        }
    }
    acc
}

fn result(r: &Run, key: &str) -> f64 {
    r.report["results"][key].as_f64().unwrap_or_else(|| panic!("missing {key}: {}", r.report))
}

#[test]
fn gen_correlation_verifies() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    assert_eq!(mufact(&["gen", "correlation", "--k", "4", "--seed", "7", "--out", s(&c)]).code, 0);
    let m = matrix(&read(&c));
    assert!((0..4).all(|i| (m[(i, i)] - 1.0).norm() <= 1e-12));
    let v = mufact(&["verify", "--what", "correlation", s(&c)]);
    assert_eq!(v.code, 0);
    assert_eq!(v.report["results"]["pass"], json!(true));
}

#[test]
fn gen_tuple_members_are_unitary() {
    let dir = TempDir::new().unwrap();
    let t = p(&dir, "t.json");
    assert_eq!(mufact(&["gen", "tuple", "--d", "2", "--k", "3", "--seed", "1", "--out", s(&t)]).code, 0);
    let file = read(&t);
    let members = file["tuples"][0].as_array().unwrap();
    assert_eq!(members.len(), 3);
    for u in members {
        let u = matrix(u);
        assert!((&u.adjoint_mul(&u) - &ComplexMatrix::identity(2)).fro_norm() <= 1e-10);
    }
    assert_eq!(mufact(&["verify", "--what", "ensemble", s(&t)]).code, 0);
}

#[test]
fn gen_fkd_convex_matches_its_certificate() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "planted");
    let r = mufact(&["gen", "fkd-convex", "--k", "4", "--d", "2", "--atoms", "3", "--seed", "5", "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = matrix(&read(&out.join("C.json")));
    let cert = read(&out.join("certificate.json"));
    assert!((&gram_average_of(&cert["ensemble"]) - &c).max_abs() <= 1e-12);
    assert_eq!(mufact(&["verify", "--what", "certificate", s(&out.join("certificate.json"))]).code, 0);
    assert_eq!(mufact(&["verify", "--what", "correlation", s(&out.join("C.json"))]).code, 0);
}

#[test]
fn factorise_planted_instance() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "planted");
    mufact(&["gen", "fkd-convex", "--k", "4", "--d", "2", "--atoms", "3", "--seed", "5", "--out", s(&out)]);
    let cert = p(&dir, "cert.json");
    let r = mufact(&["factorise", "--C", s(&out.join("C.json")), "--d", "2", "--seed", "3", "--out", s(&cert)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(result(&r, "residual_fro") <= 1e-4);
    let v = mufact(&["verify", "--what", "certificate", s(&cert)]);
    assert_eq!(v.code, 0, "{}", v.report);
    // the certificate's tuples reproduce its stored achieved matrix
    let file = read(&cert);
    assert!((&gram_average_of(&file["ensemble"]) - &matrix(&file["achieved"])).max_abs() <= 1e-10);
}

#[test]
fn factorise_all_ones_at_d1() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "ones.json");
    write(&c, &matrix_json(&ComplexMatrix::ones(4)));
    let r = mufact(&["factorise", "--C", s(&c), "--d", "1", "--tol", "1e-10", "--restarts", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(result(&r, "residual_fro") <= 1e-10);
}

#[test]
fn identity_is_in_the_rank_one_hull_at_d1() {
    // averaging z z^* over the Fourier vectors z_i = ω^{il} gives the identity
    let k = 3;
    let w = Complex64::from_polar(1.0, std::f64::consts::TAU / k as f64);
    let mut avg = ComplexMatrix::zeros(k, k);
    for l in 0..k {
        let z: Vec<Complex64> = (0..k).map(|i| w.powu((i * l) as u32)).collect();
        avg = &avg + &ComplexMatrix::from_fn(k, k, |i, j| z[i] * z[j].conj() / k as f64);
    }
    assert!((&avg - &ComplexMatrix::identity(k)).max_abs() <= 1e-14);

    let dir = TempDir::new().unwrap();
    let c = p(&dir, "id.json");
    write(&c, &matrix_json(&ComplexMatrix::identity(k)));
    let r = mufact(&["factorise", "--C", s(&c), "--d", "1", "--restarts", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(result(&r, "residual_fro") <= 1e-8);
}

#[test]
fn residual_above_tol_exits_3_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    mufact(&["gen", "correlation", "--k", "5", "--seed", "2", "--out", s(&c)]);
    let cert = p(&dir, "cert.json");
    let r = mufact(&[
        "factorise", "--C", s(&c), "--d", "1", "--restarts", "1", "--max-iters", "1", "--tol", "1e-12", "--out", s(&cert),
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(result(&r, "residual_fro") > 1e-12);
    assert_eq!(r.report["results"]["within_tol"], json!(false));
    assert_eq!(mufact(&["verify", "--what", "certificate", s(&cert)]).code, 0);
}

#[test]
fn mu_extract_round_trip() {
    let dir = TempDir::new().unwrap();
    let planted = p(&dir, "planted");
    mufact(&["gen", "fkd-convex", "--k", "3", "--d", "2", "--atoms", "2", "--seed", "9", "--out", s(&planted)]);
    let cert = read(&planted.join("certificate.json"));
    let tuples = p(&dir, "tuples.json");
    write(&tuples, &cert["ensemble"]);
    let phi = p(&dir, "phi.json");
    let r = mufact(&["mu", "--tuples", s(&tuples), "--out", s(&phi)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["results"]["terms"], json!(2 * 16));
    assert_eq!(mufact(&["verify", "--what", "ensemble", s(&phi)]).code, 0);
    assert_eq!(mufact(&["verify", "--what", "channel", s(&phi)]).code, 0);

    let back = p(&dir, "back.json");
    let r = mufact(&["extract", "--ensemble", s(&phi), "--C", s(&planted.join("C.json")), "--d", "2", "--k", "3", "--out", s(&back)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = matrix(&read(&planted.join("C.json")));
    assert!((&gram_average_of(&read(&back)) - &c).max_abs() <= 1e-9);
    assert_eq!(mufact(&["verify", "--what", "ensemble", s(&back)]).code, 0);
}

#[test]
fn single_identity_member_gives_d4_terms() {
    let d = 2;
    let dir = TempDir::new().unwrap();
    let t = p(&dir, "t.json");
    write(&t, &json!({ "d": d, "k": 1, "weights": [1.0], "tuples": [[matrix_json(&ComplexMatrix::identity(d))]] }));
    let phi = p(&dir, "phi.json");
    let r = mufact(&["mu", "--tuples", s(&t), "--out", s(&phi)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let file = read(&phi);
    let weights = file["weights"].as_array().unwrap();
    assert_eq!(weights.len(), d.pow(4));
    assert!(weights.iter().all(|w| (w.as_f64().unwrap() - 1.0 / 16.0).abs() <= 1e-15));
}

#[test]
fn tampered_ensemble_exits_4() {
    let dir = TempDir::new().unwrap();
    let t = p(&dir, "t.json");
    mufact(&["gen", "tuple", "--d", "2", "--k", "3", "--seed", "4", "--out", s(&t)]);
    let phi = p(&dir, "phi.json");
    mufact(&["mu", "--tuples", s(&t), "--out", s(&phi)]);
    let tuple = read(&t);
    let c = p(&dir, "c.json");
    write(&c, &matrix_json(&gram_average_of(&tuple)));

    let mut bad = read(&phi);
    bad["unitaries"][3] = matrix_json(&ComplexMatrix::identity(6));
    let bad_path = p(&dir, "bad.json");
    write(&bad_path, &bad);
    let r = mufact(&["extract", "--ensemble", s(&bad_path), "--C", s(&c)]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert_eq!(mufact(&["extract", "--ensemble", s(&phi), "--C", s(&c)]).code, 0);
}

#[test]
fn correct_exact_input_is_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let planted = p(&dir, "planted");
    mufact(&["gen", "fkd-convex", "--k", "3", "--d", "2", "--atoms", "2", "--seed", "11", "--out", s(&planted)]);
    let tuples = p(&dir, "tuples.json");
    write(&tuples, &read(&planted.join("certificate.json"))["ensemble"]);
    let phi = p(&dir, "phi.json");
    mufact(&["mu", "--tuples", s(&tuples), "--out", s(&phi)]);
    let out = p(&dir, "correction.json");
    let r = mufact(&["correct", "--C", s(&planted.join("C.json")), "--phi", s(&phi), "--epsilon", "1e-6", "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(result(&r, "max_abs_delta") <= 1e-9);
    assert_eq!(r.report["results"]["bound_ok"], json!(true));
    assert!(result(&r, "premise_norm_lb") <= 1e-9);
    let v = mufact(&["verify", "--what", "certificate", s(&out)]);
    assert_eq!(v.code, 0, "{}", v.report);
    assert_eq!(v.report["results"]["checks"][0]["details"]["d"], json!(4));
}

#[test]
fn correct_convex_perturbation_respects_the_bound() {
    // C' = (1-t) C0 + t C1 with Φ exact for C0 is within 2t of δ_d ⊗ S_{C'}
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    mufact(&["gen", "fkd-convex", "--k", "3", "--d", "1", "--atoms", "2", "--seed", "21", "--out", s(&a)]);
    mufact(&["gen", "fkd-convex", "--k", "3", "--d", "1", "--atoms", "2", "--seed", "22", "--out", s(&b)]);
    let c0 = matrix(&read(&a.join("C.json")));
    let c1 = matrix(&read(&b.join("C.json")));
    let t = 0.05;
    let mixed = &c0.scale_real(1.0 - t) + &c1.scale_real(t);
    let c = p(&dir, "c.json");
    write(&c, &matrix_json(&mixed));
    let tuples = p(&dir, "tuples.json");
    write(&tuples, &read(&a.join("certificate.json"))["ensemble"]);
    let phi = p(&dir, "phi.json");
    mufact(&["mu", "--tuples", s(&tuples), "--out", s(&phi)]);
    let eps = format!("{}", 2.0 * t);
    let r = mufact(&["correct", "--C", s(&c), "--phi", s(&phi), "--epsilon", &eps, "--skip-premise"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["results"]["bound_ok"], json!(true));
    assert!(result(&r, "max_abs_delta") < 4.0 * t);
}

#[test]
fn norms_of_psd_symbol() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.json");
    write(&a, &matrix_json(&ComplexMatrix::from_real(2, 2, &[2.0, 0.5, 0.5, 1.0])));
    let r = mufact(&["norms", "--A", s(&a), "--psd"]);
    assert_eq!(r.code, 0);
    assert_eq!(result(&r, "norm"), 2.0);
    let r = mufact(&["norms", "--A", s(&a), "--seed", "3"]);
    assert_eq!(r.code, 0);
    assert!((result(&r, "cb_upper") - 2.0).abs() <= 1e-4);
    assert!(result(&r, "norm_lower_bound") <= result(&r, "cb_upper") + 1e-9);

    let indefinite = p(&dir, "h.json");
    write(&indefinite, &matrix_json(&ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])));
    assert_eq!(mufact(&["norms", "--A", s(&indefinite), "--psd"]).code, 2);
}

#[test]
fn dilate_scalar_half() {
    let dir = TempDir::new().unwrap();
    let x = p(&dir, "x.json");
    write(&x, &json!({ "rows": 1, "cols": 1, "entries": [[0.5, 0.0]] }));
    let r = mufact(&["dilate", "--X", s(&x)]);
    assert_eq!(r.code, 0);
    let w = matrix(&r.report["outputs"]["dilation"]);
    let h = 0.8660254038;
    let want = ComplexMatrix::from_real(2, 2, &[0.5, h, -h, 0.5]);
    assert!((&w - &want).max_abs() <= 1e-10);
}

#[test]
fn dilate_rejects_large_norm() {
    let dir = TempDir::new().unwrap();
    let x = p(&dir, "x.json");
    write(&x, &json!({ "rows": 1, "cols": 1, "entries": [[1.5, 0.0]] }));
    let r = mufact(&["dilate", "--X", s(&x)]);
    assert_eq!(r.code, 5, "{}", r.stderr);
}

#[test]
fn biaverage_of_identity_channel_is_all_ones() {
    let k = 3;
    // Choi matrix of the identity map: blocks E_ij in position (i, j)
    let choi = ComplexMatrix::from_fn(k * k, k * k, |r, c| {
        let (i, a, j, b) = (r / k, r % k, c / k, c % k);
        Complex64::new(if a == i && b == j { 1.0 } else { 0.0 }, 0.0)
    });
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "choi.json");
    write(&path, &matrix_json(&choi));
    let r = mufact(&["biaverage", "--choi", s(&path)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let b = matrix(&r.report["outputs"]["symbol"]);
    assert!((&b - &ComplexMatrix::ones(k)).max_abs() <= 1e-12);
    assert_eq!(mufact(&["verify", "--what", "channel", s(&path)]).code, 0);
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let broken = p(&dir, "broken.json");
    std::fs::write(&broken, "{\"rows\": 2").unwrap();
    assert_eq!(mufact(&["dilate", "--X", s(&broken)]).code, 2);

    let short = p(&dir, "short.json");
    write(&short, &json!({ "rows": 2, "cols": 2, "entries": [[1.0, 0.0]] }));
    assert_eq!(mufact(&["norms", "--A", s(&short)]).code, 2);

    assert_eq!(mufact(&["dilate", "--X", s(&p(&dir, "missing.json"))]).code, 2);
    assert_eq!(mufact(&["gen", "correlation"]).code, 2);
    assert_eq!(mufact(&["gen", "correlation", "--k", "0"]).code, 2);
    assert_eq!(mufact(&["frobnicate"]).code, 2);

    // not a correlation matrix
    let c = p(&dir, "c.json");
    write(&c, &matrix_json(&ComplexMatrix::diag_real(&[1.0, 2.0])));
    assert_eq!(mufact(&["factorise", "--C", s(&c), "--d", "1"]).code, 2);
}

#[test]
fn failed_verification_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "planted");
    mufact(&["gen", "fkd-convex", "--k", "3", "--d", "2", "--atoms", "2", "--seed", "1", "--out", s(&out)]);
    let mut cert = read(&out.join("certificate.json"));
    cert["achieved"]["entries"][1][0] = json!(0.123);
    let bad = p(&dir, "bad.json");
    write(&bad, &cert);
    let r = mufact(&["verify", "--what", "certificate", s(&out.join("certificate.json")), s(&bad)]);
    assert_eq!(r.code, 4);
    assert_eq!(r.report["results"]["checks"][0]["pass"], json!(true));
    assert_eq!(r.report["results"]["checks"][1]["pass"], json!(false));

    let c = p(&dir, "c.json");
    write(&c, &matrix_json(&ComplexMatrix::diag_real(&[1.0, 2.0])));
    assert_eq!(mufact(&["verify", "--what", "correlation", s(&c)]).code, 4);
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    mufact(&["gen", "correlation", "--k", "3", "--seed", "8", "--out", s(&c)]);
    let args = ["factorise", "--C", s(&c), "--d", "2", "--restarts", "6", "--max-iters", "40", "--seed", "5"];
    let strip = |mut r: Run| {
        r.report.as_object_mut().unwrap().remove("timing_s");
        r.report
    };
    let first = strip(mufact(&args));
    let again = strip(mufact(&args));
    let threaded = strip(mufact_env(&args, &[("MUFACT_THREADS", "3")]));
    assert_eq!(first, again);
    assert_eq!(first, threaded);
    assert_eq!(mufact_env(&args, &[("MUFACT_THREADS", "zero")]).code, 2);
}
