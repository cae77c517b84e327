use num_complex::Complex64;

use super::NormEstimate;
use crate::error::{Error, Result};
use crate::numkit::random::complex_gaussian;
use crate::numkit::{herm_eig, polar, sqrt_psd, svd, ComplexMatrix, Seed};

const DUAL_SEED: u64 = 0x5c40b;
const DUAL_RANDOM_STARTS: usize = 16;
const DUAL_ITERS: usize = 500;
const WEIGHT_ITERS: usize = 1000;
const WEIGHT_FLOOR: f64 = 1e-9;
const ENTROPY_STAGES: usize = 7;

/// Budgets for [`schur_cb_norm_with`].
#[derive(Debug, Clone, Copy)]
pub struct CbParams {
    /// Dykstra iterations allowed per bisection step.
    pub max_projections: usize,
    /// Smallest eigenvalue (relative to `max|a|`) accepted as PSD.
    pub feas_tol: f64,
    pub depth: usize,
    /// Stop once `upper - lower <= rel_gap * upper`.
    pub rel_gap: f64,
    /// Seed the bracket from the trace-norm dual before bisecting.
    pub dual_ascent: bool,
}

impl Default for CbParams {
    fn default() -> Self {
        Self {
            max_projections: 10_000,
            feas_tol: 1e-8,
            depth: 20,
            rel_gap: 1e-4,
            dual_ascent: true,
        }
    }
}

/// How a bisection probe ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOutcome {
    Feasible,
    Infeasible,
    /// The certified upper bound found while probing already closed the bracket.
    BracketClosed,
}

/// One bisection probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub t: f64,
    pub outcome: ProbeOutcome,
    /// Best certified feasible level seen during the probe.
    pub certified_upper: f64,
    pub iterations: usize,
}

/// Completely bounded norm of the Schur multiplier `S_A`.
///
/// Uses the semidefinite characterisation from Paulsen's monograph: `‖S_A‖_cb` is the least `t`
/// with `[[R, A], [A^*, S]] ⪰ 0` and all diagonal entries of `R`, `S` at most `t`.
pub fn schur_cb_norm(a: &ComplexMatrix) -> Result<NormEstimate> {
    Ok(schur_cb_norm_with(a, &CbParams::default())?.0)
}

/// [`schur_cb_norm`] with explicit budgets, also returning the bisection trace.
///
/// Both ends of the bracket are backed by witnesses. Upper: `R = |A^*|`, `S = |A|` is feasible
/// for the largest of their diagonals; any `R ≻ 0` gives the feasible pair `(R, A^* R^{-1} A)`;
/// and an affine point with smallest eigenvalue `-η` is feasible for `t + η` after adding `η I`.
/// Lower: `max|a_ij|`, and for unit vectors `ξ, η` the trace norm `‖A ∘ ξη^*‖_1`, improved by
/// alternating between the polar factor and the top singular pair (the dual of the semidefinite
/// program). Bisection runs inside this bracket with Dykstra's alternating projections deciding
/// each probe; a probe that cannot decide within the budget is a `NoConvergence` error.
pub fn schur_cb_norm_with(a: &ComplexMatrix, params: &CbParams) -> Result<(NormEstimate, Vec<BisectionStep>)> {
    a.check_square("cb-norm symbol")?;
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok((NormEstimate::new(0.0, 0.0, "zero"), Vec::new()));
    }
    let a = a.scale_real(1.0 / scale);
    let k = a.rows();

    let mut upper = abs_witness(&a)?;
    let mut method = "abs-witness";
    let mut lower: f64 = 1.0;
    if params.dual_ascent {
        lower = lower.max(dual_lower(&a)?);
        let before = upper;
        weighted_ascent(&a, &mut lower, &mut upper, 0.25 * params.rel_gap)?;
        if upper < before {
            method = "weighted-dual";
        }
    }
    let mut lower = lower.min(upper);
    let mut trace = Vec::new();

    let mut depth = 0;
    while upper - lower > params.rel_gap * upper && depth < params.depth {
        depth += 1;
        let t = 0.5 * (lower + upper);
        let step = dykstra_probe(&a, t, lower, params)?;
        trace.push(step);
        if step.certified_upper < upper {
            upper = step.certified_upper;
            method = "dykstra-bisection";
        }
        if step.outcome == ProbeOutcome::Infeasible {
            lower = lower.max(t);
        }
    }
    // the bracket is searched inside [0, k max|a|]
    let upper = upper.min(k as f64);
    let lower = lower.min(upper);
    Ok((NormEstimate::new(lower * scale, upper * scale, method), trace))
}

/// `max(diag |A^*|, diag |A|)`, feasible through `R = (A A^*)^{1/2}`, `S = (A^* A)^{1/2}`.
fn abs_witness(a: &ComplexMatrix) -> Result<f64> {
    let r = sqrt_psd(&a.mul_adjoint(a).hermitian_part())?;
    let s = sqrt_psd(&a.adjoint_mul(a).hermitian_part())?;
    Ok(r.diagonal().iter().chain(s.diagonal().iter()).fold(0.0, |m, z| m.max(z.re)))
}

fn trace_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(svd(x)?.values.iter().sum())
}

fn rank_one_weighted(a: &ComplexMatrix, xi: &[Complex64], eta: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * xi[i] * eta[j].conj())
}

/// Best `‖A ∘ ξη^*‖_1` found by ascent from a few deterministic starts.
fn dual_lower(a: &ComplexMatrix) -> Result<f64> {
    let k = a.rows();
    let mut starts: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    let flat = vec![Complex64::new(1.0 / (k as f64).sqrt(), 0.0); k];
    starts.push((flat.clone(), flat));
    // top singular pair of the entrywise modulus
    let modulus = a.map(|z| Complex64::new(z.norm(), 0.0));
    let s = svd(&modulus)?;
    let u: Vec<Complex64> = (0..k).map(|i| Complex64::new(s.left[(i, 0)].norm(), 0.0)).collect();
    let v: Vec<Complex64> = (0..k).map(|i| Complex64::new(s.right[(i, 0)].norm(), 0.0)).collect();
    starts.push((normalise(u), normalise(v)));
    // a few fixed pseudo-random starts; the ascent is local
    let mut rng = Seed::new(DUAL_SEED).rng();
    for _ in 0..DUAL_RANDOM_STARTS {
        let xi = (0..k).map(|_| complex_gaussian(&mut rng)).collect();
        let eta = (0..k).map(|_| complex_gaussian(&mut rng)).collect();
        starts.push((normalise(xi), normalise(eta)));
    }

    let mut best: f64 = 0.0;
    for (xi, eta) in starts {
        best = best.max(ascend_dual(a, xi, eta)?.0);
    }
    Ok(best)
}

/// Alternates the polar factor `W` of `A ∘ ξη^*` with the top singular pair of `conj(W) ∘ A`.
fn ascend_dual(
    a: &ComplexMatrix,
    mut xi: Vec<Complex64>,
    mut eta: Vec<Complex64>,
) -> Result<(f64, Vec<Complex64>, Vec<Complex64>)> {
    let k = a.rows();
    let mut value = trace_norm(&rank_one_weighted(a, &xi, &eta))?;
    for _ in 0..DUAL_ITERS {
        let w = polar(&rank_one_weighted(a, &xi, &eta))?.unitary_factor;
        // Re tr(W^* (A ∘ ξη^*)) = Re ξ^T M conj(η) with M_ij = conj(w_ij) a_ij
        let m = ComplexMatrix::from_fn(k, k, |i, j| w[(i, j)].conj() * a[(i, j)]);
        let s = svd(&m)?;
        let next_xi: Vec<Complex64> = (0..k).map(|i| s.left[(i, 0)].conj()).collect();
        let next_eta: Vec<Complex64> = (0..k).map(|i| s.right[(i, 0)].conj()).collect();
        let next = trace_norm(&rank_one_weighted(a, &next_xi, &next_eta))?;
        if next <= value {
            break;
        }
        let done = next <= value * (1.0 + 1e-13);
        (value, xi, eta) = (next, next_xi, next_eta);
        if done {
            break;
        }
    }
    Ok((value, xi, eta))
}

fn normalise(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 {
        return v;
    }
    v.into_iter().map(|z| z / n).collect()
}

/// Projection onto `{[[R, A], [A^*, S]] : diag real and <= t}`.
fn project_affine(x: &mut ComplexMatrix, a: &ComplexMatrix, t: f64) {
    let k = a.rows();
    x.set_block(0, k, a);
    x.set_block(k, 0, &a.adjoint());
    for i in 0..2 * k {
        x[(i, i)] = Complex64::new(x[(i, i)].re.min(t), 0.0);
    }
}

fn project_psd(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(herm_eig(&x.hermitian_part())?.reconstruct_with(|l| l.max(0.0)).hermitian_part())
}

/// Dykstra between the PSD cone and the affine set at level `t`.
///
/// Feasible once an affine iterate has smallest eigenvalue above `-feas_tol` or its Schur
/// repair certifies a level at most `t`. Declared infeasible when the distance between the two
/// sets stops shrinking while staying well above `feas_tol`.
fn dykstra_probe(a: &ComplexMatrix, t: f64, lower: f64, params: &CbParams) -> Result<BisectionStep> {
    let k = a.rows();
    let n = 2 * k;
    let mut x = ComplexMatrix::identity(n).scale_real(t);
    project_affine(&mut x, a, t);
    let mut p = ComplexMatrix::zeros(n, n);
    let mut q = ComplexMatrix::zeros(n, n);
    let mut certified = f64::INFINITY;
    let mut gaps: Vec<f64> = Vec::new();
    const CHECK: usize = 10;
    const WINDOW: usize = 20;

    for iter in 1..=params.max_projections {
        let y = project_psd(&(&x + &p))?;
        p = &(&x + &p) - &y;
        let mut next = &y + &q;
        project_affine(&mut next, a, t);
        q = &(&y + &q) - &next;
        x = next;

        if iter % CHECK == 0 {
            let lmin = herm_eig(&x)?.min_value();
            certified = certified.min(t + (-lmin).max(0.0)).min(schur_repair(&x, a)?);
            let step = |outcome| BisectionStep {
                t,
                outcome,
                certified_upper: certified,
                iterations: iter,
            };
            if lmin >= -params.feas_tol || certified <= t {
                return Ok(step(ProbeOutcome::Feasible));
            }
            if certified - lower <= params.rel_gap * certified {
                return Ok(step(ProbeOutcome::BracketClosed));
            }
            gaps.push((&x - &y).fro_norm());
            let m = gaps.len();
            if m > WINDOW {
                let (old, new) = (gaps[m - 1 - WINDOW], gaps[m - 1]);
                if new > 100.0 * params.feas_tol && old - new < 1e-3 * new {
                    return Ok(step(ProbeOutcome::Infeasible));
                }
            }
        }
    }
    Err(Error::NoConvergence {
        routine: "dykstra",
        budget: params.max_projections,
    })
}

/// Certified level from either diagonal block of `x`, see [`certify_block`].
fn schur_repair(x: &ComplexMatrix, a: &ComplexMatrix) -> Result<f64> {
    let k = a.rows();
    let left = certify_block(a, &x.block(0, 0, k, k))?;
    let right = certify_block(&a.adjoint(), &x.block(k, k, k, k))?;
    Ok(left.min(right))
}

/// Feasible level built from a candidate `R` block alone, using `S = A^* R^{-1} A` after
/// shifting `R` to be positive definite.
fn certify_block(a: &ComplexMatrix, r: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(&r.hermitian_part())?;
    let lmax = eig.max_value();
    if lmax <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let shift = (1e-12 * lmax - eig.min_value()).max(0.0);
    let r = eig.reconstruct_with(|l| l + shift).hermitian_part();
    let inv = eig.reconstruct_with(|l| 1.0 / (l + shift));
    let s = a.adjoint_mul(&(&inv * a)).hermitian_part();
    certify_pair(a, &r, &s)
}

/// Feasible level for `[[R, A], [A^*, S]]`: balancing `R ↦ αR`, `S ↦ S/α` gives
/// `sqrt(max diag R · max diag S)`, and the smallest eigenvalue of the assembled matrix is added
/// back if negative (the `η I` shift), so the value is certified whatever `R` and `S` are.
fn certify_pair(a: &ComplexMatrix, r: &ComplexMatrix, s: &ComplexMatrix) -> Result<f64> {
    let k = a.rows();
    let (r_max, s_max) = (max_diag(r), max_diag(s));
    if !(r_max > 0.0 && s_max > 0.0 && r_max.is_finite() && s_max.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let alpha = (s_max / r_max).sqrt();
    let mut x = ComplexMatrix::zeros(2 * k, 2 * k);
    x.set_block(0, 0, &r.scale_real(alpha));
    x.set_block(0, k, a);
    x.set_block(k, 0, &a.adjoint());
    x.set_block(k, k, &s.scale_real(1.0 / alpha));
    let lmin = herm_eig(&x.hermitian_part())?.min_value();
    Ok((r_max * s_max).sqrt() + (-lmin).max(0.0))
}

fn max_diag(x: &ComplexMatrix) -> f64 {
    x.diagonal().iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re))
}

/// Dual weights `w = |ξ|²`, `v = |η|²` on the simplex and the matching primal response.
///
/// For fixed weights `tr(W R) + tr(V S)` over feasible pairs is minimised by the geometric mean
/// `R = W^{-1} # (A V A^*)` with `S = A^* R^{-1} A`, with value `g = 2 ‖W^{1/2} A V^{1/2}‖_1`. The
/// derivative of `g` in `w_i` is `R_ii` and in `v_j` is `S_jj`. With `W^{1/2} A V^{1/2} = U Σ V'^*`,
/// `R = (A V^{1/2} V') Σ^{-1} (A V^{1/2} V')^*` and `S = (A^* W^{1/2} U) Σ^{-1} (A^* W^{1/2} U)^*`,
/// which never divide by the weights.
struct WeightedResponse {
    g: f64,
    r: ComplexMatrix,
    s: ComplexMatrix,
    r_diag: Vec<f64>,
    s_diag: Vec<f64>,
}

fn weighted_response(a: &ComplexMatrix, w: &[f64], v: &[f64]) -> Result<WeightedResponse> {
    let k = a.rows();
    let (sw, sv): (Vec<f64>, Vec<f64>) = (w.iter().map(|x| x.sqrt()).collect(), v.iter().map(|x| x.sqrt()).collect());
    let b = ComplexMatrix::from_fn(k, k, |i, j| a[(i, j)] * (sw[i] * sv[j]));
    let dec = svd(&b)?;
    let g = 2.0 * dec.values.iter().sum::<f64>();
    let floor = 1e-300f64.max(dec.values[0] * 1e-15);
    let inv: Vec<f64> = dec.values.iter().map(|&x| 1.0 / x.max(floor)).collect();
    let av = ComplexMatrix::from_fn(k, k, |i, j| a[(i, j)] * sv[j]);
    let aw = ComplexMatrix::from_fn(k, k, |i, j| a[(j, i)].conj() * sw[j]);
    let weighted_gram = |c: &ComplexMatrix| {
        let scaled = ComplexMatrix::from_fn(k, k, |i, j| c[(i, j)] * inv[j]);
        scaled.mul_adjoint(c).hermitian_part()
    };
    let r = weighted_gram(&(&av * &dec.right));
    let s = weighted_gram(&(&aw * &dec.left));
    let r_diag = r.diagonal().iter().map(|z| z.re).collect();
    let s_diag = s.diagonal().iter().map(|z| z.re).collect();
    Ok(WeightedResponse { g, r, s, r_diag, s_diag })
}

/// Mirror ascent on the dual weights with entropy `μ (H(w) + H(v))` added and `μ` decreased in
/// stages. The entropy keeps the weights away from zero, so the primal response stays well
/// conditioned; its diagonal spread, and hence its suboptimality, is of order `μ log k`.
/// Tightens `lower` with `g / 2` and `upper` with certified responses; stops once the bracket is
/// within `target` (relative).
fn weighted_ascent(a: &ComplexMatrix, lower: &mut f64, upper: &mut f64, target: f64) -> Result<()> {
    let k = a.rows();
    let mut w = vec![1.0 / k as f64; k];
    let mut v = w.clone();
    let entropy = |p: &[f64]| -p.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum::<f64>();
    for stage in 0..ENTROPY_STAGES {
        let mu = *lower * 10f64.powi(-(stage as i32) - 1);
        let mut cur = weighted_response(a, &w, &v)?;
        let mut value = cur.g + mu * (entropy(&w) + entropy(&v));
        let mut step = (1.0 / mu.max(1e-300)).min(1e3);
        for _ in 0..WEIGHT_ITERS {
            *lower = lower.max(0.5 * cur.g);
            let quick = (max_of(&cur.r_diag) * max_of(&cur.s_diag)).sqrt();
            if quick < *upper {
                *upper = upper.min(certify_pair(a, &cur.r, &cur.s)?);
            }
            if *upper - *lower <= target * *upper {
                return Ok(());
            }
            let grad_w: Vec<f64> = cur.r_diag.iter().zip(&w).map(|(d, x)| d - mu * x.ln()).collect();
            let grad_v: Vec<f64> = cur.s_diag.iter().zip(&v).map(|(d, x)| d - mu * x.ln()).collect();
            let mut accepted = false;
            while step > 1e-12 {
                let (nw, nv) = (tilt(&w, &grad_w, step), tilt(&v, &grad_v, step));
                let next = weighted_response(a, &nw, &nv)?;
                let next_value = next.g + mu * (entropy(&nw) + entropy(&nv));
                if next_value.is_finite() && next_value > value {
                    let gain = next_value - value;
                    (w, v, cur, value) = (nw, nv, next, next_value);
                    step *= 1.5;
                    accepted = gain > 1e-15 * value.abs();
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    Ok(())
}

fn max_of(x: &[f64]) -> f64 {
    x.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y))
}

/// `w_i exp(step (d_i - max d))`, floored and renormalised.
fn tilt(w: &[f64], d: &[f64], step: f64) -> Vec<f64> {
    let top = d.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let raw: Vec<f64> = w.iter().zip(d).map(|(wi, di)| (wi * (step * (di - top)).exp()).max(WEIGHT_FLOOR)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
