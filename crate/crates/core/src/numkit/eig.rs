use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative tolerance for structural checks (Hermitian, unitary, PSD).
pub const STRUCT_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Eigenvalues in descending order and the matching orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    /// `Q diag(f(λ)) Q^*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let q = &self.vectors;
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)] * f(self.values[j]));
        scaled.mul_adjoint(q)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi method.
pub fn herm_eig(a: &ComplexMatrix) -> Result<EigenSystem> {
    a.check_square("herm_eig input")?;
    let residual = a.hermitian_residual();
    if residual > STRUCT_TOL * (1.0 + a.fro_norm()) {
        return Err(Error::NotHermitian { residual });
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.fro_norm();

    if n > 1 && scale > 0.0 {
        let target = (1e-15 * scale).powi(2);
        let negligible = 1e-18 * scale;
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_sq(&m) <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q, negligible);
                }
            }
        }
        if !converged && off_diagonal_sq(&m) > target {
            return Err(Error::NoConvergence {
                routine: "herm_eig",
                budget: MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    // stable sort keeps equal eigenvalues in their Jacobi order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_sq(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc
}

/// Annihilates `m[p,q]` with `m <- J^* m J`, accumulating `v <- v J`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, negligible: f64) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if r <= negligible {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    // phase that makes the pivot real, then a real symmetric rotation
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e = phase.conj();
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = e * (-s);
    let jqq = e * c;

    let n = m.rows();
    for row in 0..n {
        let xp = m[(row, p)];
        let xq = m[(row, q)];
        m[(row, p)] = xp * jpp + xq * jqp;
        m[(row, q)] = xp * jpq + xq * jqq;
    }
    for col in 0..n {
        let yp = m[(p, col)];
        let yq = m[(q, col)];
        m[(p, col)] = jpp.conj() * yp + jqp.conj() * yq;
        m[(q, col)] = jpq.conj() * yp + jqq.conj() * yq;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for row in 0..n {
        let xp = v[(row, p)];
        let xq = v[(row, q)];
        v[(row, p)] = xp * jpp + xq * jqp;
        v[(row, q)] = xp * jpq + xq * jqq;
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.min_value())
}

/// PSD test with the relative floor `-tol (1 + ‖A‖_F)`.
pub fn is_psd(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    let floor = -tol * (1.0 + a.fro_norm());
    Ok(min_eigenvalue(a)? >= floor)
}

/// Principal square root of a PSD matrix; eigenvalues down to `-1e-10 (1 + ‖A‖_F)` are clamped to zero.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    let floor = -STRUCT_TOL * (1.0 + a.fro_norm());
    let min = eig.min_value();
    if min < floor {
        return Err(Error::NotPsd { min_eig: min });
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()).hermitian_part())
}
