use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `X = left * diag(values) * right^*` with descending nonnegative singular values.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: ComplexMatrix,
    pub values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let m = self.left.rows();
        let r = self.values.len();
        let scaled = ComplexMatrix::from_fn(m, r, |i, j| self.left[(i, j)] * self.values[j]);
        scaled.mul_adjoint(&self.right)
    }
}

/// Unitary and PSD factors of `X = U P`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    pub unitary_factor: ComplexMatrix,
    pub psd_factor: ComplexMatrix,
}

/// Thin SVD by one-sided (Hestenes) Jacobi.
///
/// For an `m x n` input with `m >= n` the left factor is `m x n`, the right factor `n x n`.
/// Wide inputs are handled through the adjoint, so the left factor is then `m x m` and the
/// right factor `n x m`. Left singular vectors belonging to (numerically) zero singular values
/// are completed deterministically by Gram-Schmidt against the standard basis.
pub fn svd(x: &ComplexMatrix) -> Result<Svd> {
    if x.rows() < x.cols() {
        let t = svd_tall(&x.adjoint())?;
        return Ok(Svd {
            left: t.right,
            values: t.values,
            right: t.left,
        });
    }
    svd_tall(x)
}

fn svd_tall(x: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = (x.rows(), x.cols());
    // work on columns
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| x.column(j)).collect();
    let mut v = ComplexMatrix::identity(n);
    let tol = 1e-15f64.max(m as f64 * f64::EPSILON);
    // columns at roundoff level relative to ‖X‖_F carry no information and are left alone
    let negligible = (f64::EPSILON * x.fro_norm()).powi(2);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || alpha <= negligible || beta <= negligible || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let theta = (beta - alpha) / (2.0 * g);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let e = phase.conj();
                let (jpp, jpq, jqp, jqq) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0), e * (-s), e * c);
                for r in 0..m {
                    let xp = cols[p][r];
                    let xq = cols[q][r];
                    cols[p][r] = xp * jpp + xq * jqp;
                    cols[q][r] = xp * jpq + xq * jqq;
                }
                for r in 0..n {
                    let xp = v[(r, p)];
                    let xq = v[(r, q)];
                    v[(r, p)] = xp * jpp + xq * jqp;
                    v[(r, q)] = xp * jpq + xq * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "svd",
            budget: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let smax = values.first().copied().unwrap_or(0.0);
    let zero_floor = smax * (m.max(n) as f64) * f64::EPSILON;

    let right = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (slot, &i) in order.iter().enumerate() {
        let mut col: Vec<Complex64> = if values[slot] > zero_floor && values[slot] > 0.0 {
            cols[i].iter().map(|z| z / values[slot]).collect()
        } else {
            Vec::new()
        };
        if !col.is_empty() {
            // re-orthonormalise against the larger singular directions
            orthogonalize(&mut col, &basis);
            orthogonalize(&mut col, &basis);
            let nrm = vec_norm(&col);
            if nrm > 0.5 {
                col.iter_mut().for_each(|z| *z /= nrm);
            } else {
                col.clear();
            }
        }
        if col.is_empty() {
            col = complete_basis(&basis, m);
        }
        basis.push(col);
    }
    let mut left = ComplexMatrix::zeros(m, n);
    for (j, col) in basis.iter().enumerate() {
        left.set_column(j, col);
    }
    Ok(Svd { left, values, right })
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let proj: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        for (y, x) in v.iter_mut().zip(b) {
            *y -= proj * x;
        }
    }
}

/// First standard basis vector (after Gram-Schmidt) that is independent of `basis`.
fn complete_basis(basis: &[Vec<Complex64>], m: usize) -> Vec<Complex64> {
    for e in 0..m {
        let mut v = vec![ZERO; m];
        v[e] = ONE;
        orthogonalize(&mut v, basis);
        orthogonalize(&mut v, basis);
        let nrm = vec_norm(&v);
        if nrm > 0.5 {
            v.iter_mut().for_each(|z| *z /= nrm);
            return v;
        }
    }
    unreachable!("basis of dimension {} cannot exceed {m}", basis.len())
}

/// Polar decomposition `X = U P` with `U = left * right^*`, `P = right * Σ * right^*`.
pub fn polar(x: &ComplexMatrix) -> Result<PolarParts> {
    x.check_square("polar input")?;
    let s = svd(x)?;
    let n = x.rows();
    let unitary_factor = s.left.mul_adjoint(&s.right);
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| s.right[(i, j)] * s.values[j]);
    let psd_factor = scaled.mul_adjoint(&s.right).hermitian_part();
    Ok(PolarParts {
        unitary_factor,
        psd_factor,
    })
}

/// Largest singular value.
pub fn op_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(svd(x)?.values.first().copied().unwrap_or(0.0))
}
