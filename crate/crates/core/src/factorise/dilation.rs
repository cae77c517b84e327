use crate::error::{Error, Result};
use crate::numkit::{svd, ComplexMatrix};

/// Contractions whose norm exceeds 1 by at most this much are rescaled to norm 1.
pub const NORM_SLACK: f64 = 1e-9;

/// Unitary `W = [[X, C U], [-U D, X]]` of size `2d` with `X` in both diagonal corners.
///
/// `C = sqrt(I - X X^*)`, `D = sqrt(I - X^* X)` and `U` is the unitary polar factor of `X`
/// (the identity when `X = 0`). This is the Halmos dilation conjugated by `diag(I, -I)` and
/// `diag(I, U)`, using `U X^* U = X`.
///
/// All three factors come from one SVD `X = L Σ R^*`: `C = L √(I-Σ²) L^*`, `D = R √(I-Σ²) R^*`,
/// `U = L R^*`. Taking the square roots separately loses `C U = U D` to roundoff near `‖X‖ = 1`.
pub fn halmos_dilate(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    x.check_square("dilation input")?;
    let s = svd(x)?;
    let norm = s.values.first().copied().unwrap_or(0.0);
    if norm > 1.0 + NORM_SLACK {
        return Err(Error::NormTooLarge { norm });
    }
    // an excess at the level of a few ulps is roundoff in the norm itself; rescaling would only perturb X
    let (x, sigma) = if norm > 1.0 + 8.0 * f64::EPSILON {
        (x.scale_real(1.0 / norm), s.values.iter().map(|v| v / norm).collect())
    } else {
        (x.clone(), s.values.clone())
    };
    let d = x.rows();
    let defect: Vec<f64> = sigma.iter().map(|&v: &f64| ((1.0 - v) * (1.0 + v)).max(0.0).sqrt()).collect();
    let weighted = |q: &ComplexMatrix| ComplexMatrix::from_fn(d, d, |i, j| q[(i, j)] * defect[j]).mul_adjoint(q);
    let c = weighted(&s.left);
    let dd = weighted(&s.right);
    let u = s.left.mul_adjoint(&s.right);
    let mut w = ComplexMatrix::zeros(2 * d, 2 * d);
    w.set_block(0, 0, &x);
    w.set_block(0, d, &(&c * &u));
    w.set_block(d, 0, &-&(&u * &dd));
    w.set_block(d, d, &x);
    Ok(w)
}
