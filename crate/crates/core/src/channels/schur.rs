use num_complex::Complex64;

use super::LinearMap;
use crate::error::{Error, Result};
use crate::numkit::{herm_eig, ComplexMatrix, STRUCT_TOL};

/// The symbol `C` of the Schur multiplier `S_C(X) = C ∘ X` on `M_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSymbol {
    matrix: ComplexMatrix,
}

impl SchurSymbol {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        matrix.check_square("Schur symbol")?;
        Ok(Self { matrix })
    }

    /// Accepts `matrix` only if it is a correlation matrix (PSD with unit diagonal).
    pub fn correlation(matrix: ComplexMatrix) -> Result<Self> {
        matrix.check_square("correlation matrix")?;
        let check = verify_correlation(&matrix)?;
        if check.hermitian_residual > STRUCT_TOL * (1.0 + matrix.fro_norm()) {
            return Err(Error::NotHermitian {
                residual: check.hermitian_residual,
            });
        }
        if !check.psd {
            return Err(Error::NotPsd { min_eig: check.min_eig });
        }
        if check.max_diag_deviation > STRUCT_TOL {
            return Err(Error::InvalidInput(format!(
                "correlation matrix diagonal deviates from 1 by {:.3e}",
                check.max_diag_deviation
            )));
        }
        Ok(Self { matrix })
    }

    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }
}

impl LinearMap for SchurSymbol {
    fn dim_in(&self) -> usize {
        self.k()
    }

    fn dim_out(&self) -> usize {
        self.k()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        schur_apply(self, x)
    }
}

/// `C ∘ X`.
pub fn schur_apply(c: &SchurSymbol, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    c.matrix.hadamard(x)
}

/// Outcome of the correlation-matrix test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationCheck {
    pub hermitian_residual: f64,
    pub min_eig: f64,
    pub max_diag_deviation: f64,
    pub psd: bool,
    pub ok: bool,
}

pub fn verify_correlation(c: &ComplexMatrix) -> Result<CorrelationCheck> {
    c.check_square("correlation matrix")?;
    let hermitian_residual = c.hermitian_residual();
    let scale = 1.0 + c.fro_norm();
    let min_eig = herm_eig(&c.hermitian_part())?.min_value();
    let max_diag_deviation = c
        .diagonal()
        .iter()
        .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let hermitian = hermitian_residual <= STRUCT_TOL * scale;
    let psd = min_eig >= -STRUCT_TOL * scale;
    Ok(CorrelationCheck {
        hermitian_residual,
        min_eig,
        max_diag_deviation,
        psd,
        ok: hermitian && psd && max_diag_deviation <= STRUCT_TOL,
    })
}

/// An element `A = Σ A_{i,j} ⊗ E_{i,j}` of `M_d ⊗ M_k` held as a `k x k` grid of `d x d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    d: usize,
    k: usize,
    matrix: ComplexMatrix,
}

impl BlockOperator {
    pub fn new(d: usize, k: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != d * k || matrix.cols() != d * k {
            return Err(Error::ShapeMismatch(format!(
                "block operator with d={d}, k={k} needs a {0}x{0} matrix",
                d * k
            )));
        }
        Ok(Self { d, k, matrix })
    }

    pub fn from_blocks(d: usize, blocks: &[Vec<ComplexMatrix>]) -> Result<Self> {
        let k = blocks.len();
        if blocks.iter().any(|row| row.len() != k)
            || blocks.iter().flatten().any(|b| b.rows() != d || b.cols() != d)
        {
            return Err(Error::ShapeMismatch("block grid shape does not match (d, k)".into()));
        }
        Ok(Self {
            d,
            k,
            matrix: ComplexMatrix::from_blocks(blocks),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.matrix.block(i * self.d, j * self.d, self.d, self.d)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// `(tr_d ⊗ id)(X)`: the `k x k` matrix of normalised block traces.
pub fn block_trace(x: &ComplexMatrix, d: usize, k: usize) -> Result<ComplexMatrix> {
    if x.rows() != d * k || x.cols() != d * k {
        return Err(Error::ShapeMismatch(format!("expected a {0}x{0} block matrix", d * k)));
    }
    Ok(ComplexMatrix::from_fn(k, k, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            acc += x[(i * d + r, j * d + r)];
        }
        acc / d as f64
    }))
}

/// `I_d ⊗ B` in the block layout.
pub fn embed_identity(b: &ComplexMatrix, d: usize) -> ComplexMatrix {
    b.kron(&ComplexMatrix::identity(d))
}

/// `δ_d ⊗ S_C` acting on `M_d ⊗ M_k`.
#[derive(Debug, Clone)]
pub struct LiftedSchur {
    pub symbol: SchurSymbol,
    pub d: usize,
}

/// Lifts `S_C` to `δ_d ⊗ S_C`.
pub fn lift_schur(c: &SchurSymbol, d: usize) -> LiftedSchur {
    LiftedSchur {
        symbol: c.clone(),
        d,
    }
}

impl LiftedSchur {
    pub fn apply_blocks(&self, a: &BlockOperator) -> Result<BlockOperator> {
        if a.d != self.d || a.k != self.symbol.k() {
            return Err(Error::ShapeMismatch("block operator does not match the lifted map".into()));
        }
        BlockOperator::new(self.d, a.k, self.apply(&a.matrix)?)
    }
}

impl LinearMap for LiftedSchur {
    fn dim_in(&self) -> usize {
        self.d * self.symbol.k()
    }

    fn dim_out(&self) -> usize {
        self.dim_in()
    }

    /// Block `(i, j)` goes to `c_{i,j} tr_d(A_{i,j}) I_d`.
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        let (d, k) = (self.d, self.symbol.k());
        let traces = block_trace(x, d, k)?;
        let scaled = self.symbol.matrix.hadamard(&traces)?;
        Ok(embed_identity(&scaled, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::random::random_complex_gaussian;
    use crate::numkit::{random_correlation, Seed};

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn schur_examples() {
        let x = random_complex_gaussian(3, 3, Seed::new(1));
        let j = SchurSymbol::new(ComplexMatrix::ones(3)).unwrap();
        assert_eq!(schur_apply(&j, &x).unwrap(), x);
        let i = SchurSymbol::new(ComplexMatrix::identity(3)).unwrap();
        assert_eq!(schur_apply(&i, &x).unwrap(), ComplexMatrix::diag(&x.diagonal()));
        let c = SchurSymbol::correlation(random_correlation(3, Seed::new(2))).unwrap();
        let out = schur_apply(&c, &ComplexMatrix::identity(3)).unwrap();
        assert!((&out - &ComplexMatrix::identity(3)).fro_norm() < 1e-12);
    }

    #[test]
    fn schur_shape_mismatch() {
        let j = SchurSymbol::new(ComplexMatrix::ones(3)).unwrap();
        assert!(matches!(
            schur_apply(&j, &ComplexMatrix::identity(2)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn correlation_constructor_rejects_bad_diagonal() {
        let m = ComplexMatrix::diag_real(&[1.0, 2.0]);
        assert!(SchurSymbol::correlation(m).is_err());
        let not_psd = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(SchurSymbol::correlation(not_psd), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn lift_on_identity_tensors() {
        let c = SchurSymbol::correlation(random_correlation(3, Seed::new(5))).unwrap();
        let d = 2;
        let lifted = lift_schur(&c, d);
        for i in 0..3 {
            for j in 0..3 {
                let a = embed_identity(&ComplexMatrix::unit(3, 3, i, j), d);
                let out = lifted.apply(&a).unwrap();
                let want = a.scale(c.entry(i, j));
                assert!((&out - &want).fro_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lift_of_ones_is_blockwise_depolarising() {
        let d = 3;
        let lifted = lift_schur(&SchurSymbol::new(ComplexMatrix::ones(2)).unwrap(), d);
        let x = BlockOperator::new(d, 2, random_complex_gaussian(6, 6, Seed::new(8))).unwrap();
        let y = lifted.apply_blocks(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = ComplexMatrix::identity(d).scale(x.block(i, j).normalized_trace());
                assert!((&y.block(i, j) - &want).fro_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn block_trace_of_embedding() {
        let b = ComplexMatrix::from_fn(2, 2, |i, j| z(i as f64, j as f64));
        let e = embed_identity(&b, 3);
        assert_eq!(block_trace(&e, 3, 2).unwrap(), b);
    }
}
