use num_complex::Complex64;

use super::MixedUnitaryEnsemble;
use crate::numkit::ComplexMatrix;

/// Forward cyclic shift `S = Σ_j E_{j+1 mod d, j}`.
pub fn cyclic_shift(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        s[((j + 1) % d, j)] = Complex64::new(1.0, 0.0);
    }
    s
}

/// Clock matrix `D = Σ_j ω^j E_{j,j}` with `ω = exp(2πi/d)` and 1-based `j`.
fn clock(d: usize) -> ComplexMatrix {
    let w = std::f64::consts::TAU / d as f64;
    let phases: Vec<Complex64> = (1..=d).map(|j| Complex64::from_polar(1.0, w * j as f64)).collect();
    ComplexMatrix::diag(&phases)
}

/// The `d^2` Weyl-Heisenberg unitaries `W_{a,b} = S^a D^b`, ordered lexicographically by `(a, b)`.
pub fn weyl_unitaries(d: usize) -> Vec<ComplexMatrix> {
    let s = cyclic_shift(d);
    let dclock = clock(d);
    let mut s_pow = ComplexMatrix::identity(d);
    let mut out = Vec::with_capacity(d * d);
    for _a in 0..d {
        let mut w = s_pow.clone();
        for _b in 0..d {
            out.push(w.clone());
            w = &w * &dclock;
        }
        s_pow = &s_pow * &s;
    }
    out
}

/// The completely depolarising channel `δ_d` as the uniform mixture of Weyl conjugations.
pub fn depolarizing_ensemble(d: usize) -> MixedUnitaryEnsemble {
    let us = weyl_unitaries(d);
    let w = 1.0 / (d * d) as f64;
    MixedUnitaryEnsemble::from_parts_unchecked(d, vec![w; d * d], us)
}
