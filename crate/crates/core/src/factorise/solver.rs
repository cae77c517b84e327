use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::tuples::{gram_matrix, GramCertificate, UnitaryTuple, UnitaryTupleEnsemble};
use crate::error::{Error, Result};
use crate::numkit::random::haar_unitary;
use crate::numkit::{polar, ComplexMatrix, Seed};

const WEIGHT_STEPS: usize = 500;
const RETRACTION_HALVINGS: usize = 30;
/// Relative progress per iteration below which a merge of two atoms is attempted.
const STALL: f64 = 0.05;
const MERGE_SWEEPS: usize = 20;
const POLISH_STEPS: usize = 40;

/// Settings for [`membership_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Number of tuples `M`; `None` means `k^2 + 1`.
    pub atoms: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when an iteration lowers `‖C - achieved‖_F^2` by less than `tol^2`.
    pub tol: f64,
    pub seed: Seed,
    /// Worker threads for the restarts; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            atoms: None,
            restarts: 20,
            max_iters: 500,
            tol: 1e-10,
            seed: Seed::new(0),
            threads: None,
        }
    }
}

/// Objective values of one restart after every accepted update.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub restart: usize,
    pub objective: Vec<f64>,
}

/// Searches for a convex combination of Gram matrices of unitary `k`-tuples in dimension `d`
/// close to `C` in Frobenius norm.
///
/// Each restart alternates exact-step projected gradient on the weights with per-index tuple
/// updates. An update of `U_i` in atom `m` first tries the best response
/// `polar(Σ_{j≠i} conj(R⁰_ij) U_j)`, where `R⁰` is the residual without that atom's own
/// contribution, then falls back to retracted gradient steps `polar(U_i + η Σ_{j≠i} conj(R_ij) U_j)`
/// with `η` halved until the objective drops. Only improving updates are kept, so the objective
/// never increases. Atoms whose weight reaches zero are redrawn. The lowest-index restart that
/// reaches `tol` wins; if none does, the lowest objective wins with ties going to the lower index.
/// The result does not depend on the thread count.
pub fn membership_solve(c: &ComplexMatrix, d: usize, params: &SolverParams) -> Result<GramCertificate> {
    Ok(membership_solve_traced(c, d, params)?.0)
}

/// [`membership_solve`] that also returns the objective trace of the winning restart.
pub fn membership_solve_traced(c: &ComplexMatrix, d: usize, params: &SolverParams) -> Result<(GramCertificate, SolveTrace)> {
    c.check_square("membership target")?;
    let k = c.rows();
    if k == 0 || d == 0 {
        return Err(Error::InvalidInput("membership needs k >= 1 and d >= 1".into()));
    }
    let atoms = params.atoms.unwrap_or(k * k + 1);
    if atoms == 0 || params.restarts == 0 {
        return Err(Error::InvalidInput("membership needs at least one atom and one restart".into()));
    }

    // Restarts run in batches of the pool size. The first restart to reach `tol` wins, otherwise
    // the lowest objective does, so the batch size never changes the answer.
    let stop = params.tol * params.tol;
    let run = || -> (Restart, usize) {
        let batch = rayon::current_num_threads().max(1);
        let mut best: Option<(Restart, usize)> = None;
        let mut next = 0;
        while next < params.restarts {
            let end = (next + batch).min(params.restarts);
            let results: Vec<Restart> = (next..end)
                .into_par_iter()
                .map(|r| solve_one(c, d, atoms, params, params.seed.derive(r as u64)))
                .collect();
            for (offset, cur) in results.into_iter().enumerate() {
                if cur.objective <= stop {
                    return (cur, next + offset);
                }
                if best.as_ref().is_none_or(|(b, _)| cur.objective < b.objective) {
                    best = Some((cur, next + offset));
                }
            }
            next = end;
        }
        best.expect("at least one restart")
    };
    let (best, restart) = match params.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let trace = SolveTrace {
        restart,
        objective: best.trace.clone(),
    };
    Ok((best.certificate(c)?, trace))
}

struct Restart {
    weights: Vec<f64>,
    tuples: Vec<Vec<ComplexMatrix>>,
    objective: f64,
    trace: Vec<f64>,
}

impl Restart {
    fn certificate(self, c: &ComplexMatrix) -> Result<GramCertificate> {
        let total: f64 = self.weights.iter().filter(|&&w| w > 0.0).sum();
        let mut weights = Vec::new();
        let mut tuples = Vec::new();
        for (w, t) in self.weights.into_iter().zip(self.tuples) {
            if w > 0.0 {
                weights.push(w / total);
                tuples.push(UnitaryTuple::with_tolerance(t, 1e-9)?);
            }
        }
        GramCertificate::new(UnitaryTupleEnsemble::with_tolerance(weights, tuples, 1e-9)?, c.clone())
    }
}

#[derive(Clone)]
struct State<'a> {
    c: &'a ComplexMatrix,
    d: usize,
    weights: Vec<f64>,
    tuples: Vec<Vec<ComplexMatrix>>,
    grams: Vec<ComplexMatrix>,
    achieved: ComplexMatrix,
    objective: f64,
}

impl State<'_> {
    fn refresh(&mut self) {
        let k = self.c.rows();
        let mut acc = ComplexMatrix::zeros(k, k);
        for (w, g) in self.weights.iter().zip(&self.grams) {
            if *w > 0.0 {
                acc = &acc + &g.scale_real(*w);
            }
        }
        self.objective = (self.c - &acc).fro_norm().powi(2);
        self.achieved = acc;
    }
}

fn random_tuple<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    (0..k).map(|_| haar_unitary(d, rng)).collect()
}

fn gram_of(d: usize, t: &[ComplexMatrix]) -> ComplexMatrix {
    gram_matrix(&UnitaryTuple::from_parts_unchecked(d, t.to_vec()))
}

fn solve_one(c: &ComplexMatrix, d: usize, atoms: usize, params: &SolverParams, seed: Seed) -> Restart {
    let k = c.rows();
    let mut rng = seed.rng();
    let tuples: Vec<Vec<ComplexMatrix>> = (0..atoms).map(|_| random_tuple(d, k, &mut rng)).collect();
    let grams = tuples.iter().map(|t| gram_of(d, t)).collect();
    let mut s = State {
        c,
        d,
        weights: vec![1.0 / atoms as f64; atoms],
        tuples,
        grams,
        achieved: ComplexMatrix::zeros(k, k),
        objective: 0.0,
    };
    s.refresh();
    let mut trace = vec![s.objective];
    let stop = params.tol * params.tol;

    for _ in 0..params.max_iters {
        let start = s.objective;
        if start <= stop {
            break;
        }
        update_weights(&mut s, &mut trace);
        for m in 0..atoms {
            if s.weights[m] == 0.0 {
                // a zero-weight atom does not enter the objective; give it a fresh start
                s.tuples[m] = random_tuple(d, k, &mut rng);
                s.grams[m] = gram_of(d, &s.tuples[m]);
                continue;
            }
            for i in 0..k {
                update_member(&mut s, m, i, &mut trace);
            }
        }
        if start - s.objective < STALL * start {
            try_merge(&mut s, &mut trace);
            polish(&mut s, &mut trace, stop);
        }
        if start - s.objective < stop {
            break;
        }
    }
    // the patched objective can drift by rounding; report the re-summed value
    s.refresh();
    Restart {
        weights: s.weights,
        tuples: s.tuples,
        objective: s.objective,
        trace,
    }
}

/// Projected gradient with step `1/L` on `f(p) = ‖C - Σ p_m G_m‖_F^2` over the simplex, run on
/// the quadratic form `‖C‖^2 - 2 b·p + p·H p` with `H_ab = Re<G_a, G_b>`, `b_a = Re<G_a, C>`.
fn update_weights(s: &mut State, trace: &mut Vec<f64>) {
    let m = s.weights.len();
    let h: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| s.grams[a].inner(&s.grams[b]).re).collect())
        .collect();
    let lin: Vec<f64> = s.grams.iter().map(|g| g.inner(s.c).re).collect();
    // Gershgorin bound on the largest eigenvalue of the Hessian 2H
    let lip = 2.0 * h.iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    if lip <= 0.0 {
        return;
    }
    let hp = |p: &[f64]| -> Vec<f64> { (0..m).map(|a| (0..m).map(|b| h[a][b] * p[b]).sum()).collect() };
    let model = |p: &[f64], hp: &[f64]| -> f64 { (0..m).map(|a| p[a] * (hp[a] - 2.0 * lin[a])).sum() };
    let mut p = s.weights.clone();
    let mut hp_cur = hp(&p);
    let mut value = model(&p, &hp_cur);
    let start = value;
    for _ in 0..WEIGHT_STEPS {
        let target: Vec<f64> = (0..m).map(|a| p[a] - 2.0 * (hp_cur[a] - lin[a]) / lip).collect();
        let next = project_simplex(&target);
        let hp_next = hp(&next);
        let next_value = model(&next, &hp_next);
        if !(next_value < value) {
            break;
        }
        let gain = value - next_value;
        (p, hp_cur, value) = (next, hp_next, next_value);
        if gain <= 1e-15 * (start - value).abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let old = std::mem::replace(&mut s.weights, p);
    let before = s.objective;
    s.refresh();
    if s.objective < before {
        trace.push(s.objective);
    } else {
        s.weights = old;
        s.refresh();
    }
}

/// Two atoms with nearly equal Gram matrices can cancel each other's errors to first order, after
/// which single-atom moves only make progress through curvature. This folds the closest pair into
/// one atom, polishes it, and keeps the result if the objective went down.
fn try_merge(s: &mut State, trace: &mut Vec<f64>) {
    let live: Vec<usize> = (0..s.weights.len()).filter(|&m| s.weights[m] > 0.0).collect();
    let mut pair = None;
    let mut closest = f64::INFINITY;
    for (x, &a) in live.iter().enumerate() {
        for &b in &live[x + 1..] {
            let dist = (&s.grams[a] - &s.grams[b]).fro_norm();
            if dist < closest {
                (closest, pair) = (dist, Some((a, b)));
            }
        }
    }
    let Some((a, b)) = pair else { return };
    let mut trial = s.clone();
    let (keep, drop) = if s.weights[a] >= s.weights[b] { (a, b) } else { (b, a) };
    trial.weights[keep] += trial.weights[drop];
    trial.weights[drop] = 0.0;
    trial.refresh();
    let mut scratch = Vec::new();
    for _ in 0..MERGE_SWEEPS {
        let before = trial.objective;
        for i in 0..s.c.rows() {
            update_member(&mut trial, keep, i, &mut scratch);
        }
        if before - trial.objective <= 1e-3 * before {
            break;
        }
    }
    if trial.objective < s.objective {
        *s = trial;
        trace.push(s.objective);
    }
}

/// Damped Gauss-Newton on every member and weight at once. Near a point with zero residual the
/// coordinate updates slow to a crawl, while this converges quadratically. The model is
/// underdetermined, so each step is the minimum-norm solution through the small normal matrix
/// `J J^T + λ I` over the strictly upper entries of the residual. Members move by
/// `U_i ← U_i polar(I + iH)` for Hermitian `H`, weights along `e_m - p`.
fn polish(s: &mut State, trace: &mut Vec<f64>, stop: f64) {
    let k = s.c.rows();
    let d = s.d;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let rows = 2 * pairs.len();
    if rows == 0 {
        return;
    }
    let dn = d as f64;
    let mut lambda = 1e-6;
    for _ in 0..POLISH_STEPS {
        if s.objective <= stop || lambda > 1e6 {
            return;
        }
        let live: Vec<usize> = (0..s.weights.len()).filter(|&m| s.weights[m] > 0.0).collect();
        // columns of the Jacobian of the achieved matrix, one per real parameter
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for &m in &live {
            let p = s.weights[m];
            for i in 0..k {
                let prods: Vec<ComplexMatrix> =
                    (0..k).map(|j| s.tuples[m][i].adjoint_mul(&s.tuples[m][j])).collect();
                for (a, b, imag) in hermitian_basis(d) {
                    // d c_ij = -i tr(H U_i^* U_j) / d
                    let dc = |j: usize| -> Complex64 {
                        let q = &prods[j];
                        let tr = if a == b {
                            q[(a, a)]
                        } else if imag {
                            (q[(b, a)] - q[(a, b)]) * Complex64::i()
                        } else {
                            q[(b, a)] + q[(a, b)]
                        };
                        -Complex64::i() * tr * (p / dn)
                    };
                    let mut col = vec![0.0; rows];
                    for (q, &(x, y)) in pairs.iter().enumerate() {
                        let v = if x == i {
                            dc(y)
                        } else if y == i {
                            dc(x).conj()
                        } else {
                            continue;
                        };
                        col[2 * q] = v.re;
                        col[2 * q + 1] = v.im;
                    }
                    cols.push(col);
                }
            }
        }
        for &m in &live {
            let mut col = vec![0.0; rows];
            for (q, &(x, y)) in pairs.iter().enumerate() {
                let v = s.grams[m][(x, y)] - s.achieved[(x, y)];
                col[2 * q] = v.re;
                col[2 * q + 1] = v.im;
            }
            cols.push(col);
        }
        let mut r = vec![0.0; rows];
        for (q, &(x, y)) in pairs.iter().enumerate() {
            let v = s.c[(x, y)] - s.achieved[(x, y)];
            r[2 * q] = v.re;
            r[2 * q + 1] = v.im;
        }
        let mut normal = vec![0.0; rows * rows];
        for col in &cols {
            for a in 0..rows {
                if col[a] != 0.0 {
                    for b in 0..rows {
                        normal[a * rows + b] += col[a] * col[b];
                    }
                }
            }
        }
        let scale = (0..rows).map(|a| normal[a * rows + a]).fold(0.0, f64::max).max(1e-300);
        for a in 0..rows {
            normal[a * rows + a] += lambda * scale;
        }
        let Some(y) = cholesky_solve(&mut normal, &r) else {
            lambda *= 10.0;
            continue;
        };
        let step: Vec<f64> = cols.iter().map(|c| c.iter().zip(&y).map(|(u, v)| u * v).sum()).collect();

        let mut trial = s.clone();
        let mut at = 0;
        let basis = hermitian_basis(d);
        for &m in &live {
            for i in 0..k {
                let mut h = ComplexMatrix::zeros(d, d);
                for &(a, b, imag) in &basis {
                    let t = step[at];
                    at += 1;
                    if a == b {
                        h[(a, a)] += t;
                    } else if imag {
                        h[(a, b)] += Complex64::new(0.0, t);
                        h[(b, a)] -= Complex64::new(0.0, t);
                    } else {
                        h[(a, b)] += t;
                        h[(b, a)] += t;
                    }
                }
                let Ok(pp) = polar(&(&ComplexMatrix::identity(d) + &h.scale(Complex64::i()))) else {
                    return;
                };
                trial.tuples[m][i] = &trial.tuples[m][i] * &pp.unitary_factor;
            }
            trial.grams[m] = gram_of(d, &trial.tuples[m]);
        }
        let alpha = &step[at..];
        let total: f64 = alpha.iter().sum();
        for w in trial.weights.iter_mut() {
            *w *= 1.0 - total;
        }
        for (&m, &a) in live.iter().zip(alpha) {
            trial.weights[m] += a;
        }
        for w in trial.weights.iter_mut() {
            *w = w.max(0.0);
        }
        let sum: f64 = trial.weights.iter().sum();
        if !(sum > 0.0) {
            return;
        }
        for w in trial.weights.iter_mut() {
            *w /= sum;
        }
        trial.refresh();
        if trial.objective < s.objective {
            *s = trial;
            trace.push(s.objective);
            lambda = (lambda * 0.1).max(1e-12);
        } else {
            lambda *= 10.0;
        }
    }
}

/// Real basis of `d x d` Hermitian matrices as `(a, b, imaginary)`: `E_aa`, `E_ab + E_ba` and
/// `i(E_ab - E_ba)`.
fn hermitian_basis(d: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push((a, a, false));
        for b in a + 1..d {
            out.push((a, b, false));
            out.push((a, b, true));
        }
    }
    out
}

/// Solves `A y = b` for symmetric positive definite `A` (row-major, overwritten by its factor).
fn cholesky_solve(a: &mut [f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[j * n + j];
        for p in 0..j {
            diag -= a[j * n + p] * a[j * n + p];
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for p in 0..j {
                v -= a[i * n + p] * a[j * n + p];
            }
            a[i * n + j] = v / diag;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            y[i] -= a[i * n + p] * y[p];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            y[i] -= a[p * n + i] * y[p];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}

/// Tries to lower the objective by changing member `i` of atom `m`.
fn update_member(s: &mut State, m: usize, i: usize, trace: &mut Vec<f64>) {
    let k = s.c.rows();
    let p = s.weights[m];
    let residual = s.c - &s.achieved;
    let own = &residual + &s.grams[m].scale_real(p);
    let combine = |s: &State, r: &ComplexMatrix| {
        let mut z = ComplexMatrix::zeros(s.d, s.d);
        for j in (0..k).filter(|&j| j != i) {
            z = &z + &s.tuples[m][j].scale(r[(i, j)].conj());
        }
        z
    };

    let best_response = combine(s, &own);
    if best_response.fro_norm() > 1e-14 {
        if let Ok(pp) = polar(&best_response) {
            if try_member(s, m, i, pp.unitary_factor) {
                trace.push(s.objective);
                return;
            }
        }
    }
    let dir = combine(s, &residual);
    if dir.fro_norm() <= 1e-300 {
        return;
    }
    let mut eta = 1.0;
    for _ in 0..RETRACTION_HALVINGS {
        if let Ok(pp) = polar(&(&s.tuples[m][i] + &dir.scale_real(eta))) {
            if try_member(s, m, i, pp.unitary_factor) {
                trace.push(s.objective);
                return;
            }
        }
        eta *= 0.5;
    }
}

/// Replaces `U_i` of atom `m` if that lowers the objective. Only row and column `i` of the atom's
/// Gram matrix change, so the achieved matrix is patched rather than re-summed.
fn try_member(s: &mut State, m: usize, i: usize, candidate: ComplexMatrix) -> bool {
    let k = s.c.rows();
    let d = s.d as f64;
    let mut g = s.grams[m].clone();
    for j in 0..k {
        let v = if j == i {
            Complex64::new(candidate.fro_norm().powi(2) / d, 0.0)
        } else {
            candidate.inner(&s.tuples[m][j]) / d
        };
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    let achieved = &s.achieved + &(&g - &s.grams[m]).scale_real(s.weights[m]);
    let objective = (s.c - &achieved).fro_norm().powi(2);
    if !(objective < s.objective) {
        return false;
    }
    s.tuples[m][i] = candidate;
    s.grams[m] = g;
    s.achieved = achieved;
    s.objective = objective;
    true
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
