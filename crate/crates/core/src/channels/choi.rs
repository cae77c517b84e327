use num_complex::Complex64;

use super::LinearMap;
use crate::error::{Error, Result};
use crate::numkit::{herm_eig, ComplexMatrix, STRUCT_TOL};

/// Tolerance for the trace-preserving and unital checks.
pub const CHANNEL_TOL: f64 = 1e-9;

/// Eigenvalues of a Choi matrix at or below this value are dropped by [`kraus_from_choi`].
const KRAUS_CUTOFF: f64 = 1e-10;

/// `X ↦ Σ_i A_i X A_i^*` with `dim_out x dim_in` Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus_ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus_ops
            .first()
            .ok_or_else(|| Error::InvalidInput("Kraus list is empty".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus_ops.iter().any(|a| a.rows() != dim_out || a.cols() != dim_in) {
            return Err(Error::ShapeMismatch("Kraus operators have mixed shapes".into()));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus_ops,
        })
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }
}

impl LinearMap for KrausChannel {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus_ops {
            acc = &acc + &(a * x).mul_adjoint(a);
        }
        Ok(acc)
    }
}

/// Choi matrix `(T(E_{i,j}))_{i,j}`: an `n x n` grid of `m x m` blocks for `T: M_n -> M_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn from_matrix(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix for M_{dim_in} -> M_{dim_out} must be {n}x{n}"
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    /// Square Choi matrix of a map `M_k -> M_k`, with `k` inferred from the size `k^2`.
    pub fn from_square(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.rows();
        let k = (n as f64).sqrt().round() as usize;
        if k * k != n {
            return Err(Error::ShapeMismatch(format!("Choi matrix size {n} is not a perfect square")));
        }
        Self::from_matrix(k, k, matrix)
    }

    /// `T(E_{i,j})`.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let m = self.dim_out;
        self.matrix.block(i * m, j * m, m, m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(&self.matrix.hermitian_part())?.min_value())
    }

    /// Complete positivity test: PSD within `-1e-10 (1 + ‖C‖_F)`.
    pub fn is_cp(&self) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -STRUCT_TOL * (1.0 + self.matrix.fro_norm()))
    }
}

impl LinearMap for ChoiMatrix {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `T(X) = Σ_{i,j} x_{i,j} T(E_{i,j})`.
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        let m = self.dim_out;
        let mut out = ComplexMatrix::zeros(m, m);
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let xij = x[(i, j)];
                if xij == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..m {
                    for c in 0..m {
                        out[(r, c)] += xij * self.matrix[(i * m + r, j * m + c)];
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Choi matrix of any linear map, by evaluating it on every matrix unit.
pub fn choi_of(map: &impl LinearMap) -> Result<ChoiMatrix> {
    let (n, m) = (map.dim_in(), map.dim_out());
    let mut matrix = ComplexMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let img = map.apply(&ComplexMatrix::unit(n, n, i, j))?;
            matrix.set_block(i * m, j * m, &img);
        }
    }
    ChoiMatrix::from_matrix(n, m, matrix)
}

/// Kraus operators from the spectral decomposition of a PSD Choi matrix.
pub fn kraus_from_choi(choi: &ChoiMatrix) -> Result<KrausChannel> {
    let eig = herm_eig(choi.matrix())?;
    let floor = -STRUCT_TOL * (1.0 + choi.matrix.fro_norm());
    if eig.min_value() < floor {
        return Err(Error::NotPsd {
            min_eig: eig.min_value(),
        });
    }
    let (n, m) = (choi.dim_in, choi.dim_out);
    let mut ops: Vec<ComplexMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lam)| lam > KRAUS_CUTOFF)
        .map(|(idx, &lam)| {
            let s = lam.sqrt();
            ComplexMatrix::from_fn(m, n, |r, i| eig.vectors[(i * m + r, idx)] * s)
        })
        .collect();
    if ops.is_empty() {
        ops.push(ComplexMatrix::zeros(m, n));
    }
    KrausChannel::new(ops)
}

/// Complete positivity, trace preservation and unitality, with the residual behind each flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelReport {
    pub cp: bool,
    pub tp: bool,
    pub unital: bool,
    pub min_choi_eigenvalue: f64,
    pub tp_residual: f64,
    pub unital_residual: f64,
}

impl ChannelReport {
    pub fn all(&self) -> bool {
        self.cp && self.tp && self.unital
    }
}

pub fn verify_channel(map: &impl LinearMap) -> Result<ChannelReport> {
    let choi = choi_of(map)?;
    let (n, m) = (choi.dim_in, choi.dim_out);
    let min_choi_eigenvalue = choi.min_eigenvalue()?;
    let cp = min_choi_eigenvalue >= -STRUCT_TOL * (1.0 + choi.matrix.fro_norm());

    // tr T(E_{i,j}) = δ_{i,j}
    let tr_table = ComplexMatrix::from_fn(n, n, |i, j| choi.block(i, j).trace());
    let tp_residual = (&tr_table - &ComplexMatrix::identity(n)).fro_norm();

    let mut image_of_identity = ComplexMatrix::zeros(m, m);
    for i in 0..n {
        image_of_identity = &image_of_identity + &choi.block(i, i);
    }
    let unital_residual = if n == m {
        (&image_of_identity - &ComplexMatrix::identity(m)).fro_norm()
    } else {
        f64::INFINITY
    };
    Ok(ChannelReport {
        cp,
        tp: tp_residual <= CHANNEL_TOL,
        unital: unital_residual <= CHANNEL_TOL,
        min_choi_eigenvalue,
        tp_residual,
        unital_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing_ensemble, IdentityMap, MixedUnitaryEnsemble};
    use crate::numkit::random::{random_complex_gaussian, random_haar_unitary};
    use crate::numkit::Seed;

    #[test]
    fn identity_channel_choi() {
        let k = 3;
        let choi = choi_of(&IdentityMap(k)).unwrap();
        for i in 0..k {
            for j in 0..k {
                assert_eq!(choi.block(i, j), ComplexMatrix::unit(k, k, i, j));
            }
        }
        let rep = verify_channel(&IdentityMap(k)).unwrap();
        assert!(rep.all());
    }

    #[test]
    fn depolarising_choi_blocks() {
        let k = 3;
        let e = depolarizing_ensemble(k);
        let choi = choi_of(&e).unwrap();
        for i in 0..k {
            for j in 0..k {
                let want = if i == j {
                    ComplexMatrix::identity(k).scale_real(1.0 / k as f64)
                } else {
                    ComplexMatrix::zeros(k, k)
                };
                assert!((&choi.block(i, j) - &want).fro_norm() < 1e-14);
            }
        }
        assert!(verify_channel(&e).unwrap().all());
    }

    #[test]
    fn mixed_unitary_is_unital_channel() {
        let e = MixedUnitaryEnsemble::new(
            vec![0.2, 0.3, 0.5],
            (0..3).map(|s| random_haar_unitary(4, Seed::new(s))).collect(),
        )
        .unwrap();
        assert!(verify_channel(&e).unwrap().all());
    }

    #[test]
    fn kraus_choi_round_trip() {
        let ops: Vec<ComplexMatrix> = (0..3).map(|s| random_complex_gaussian(3, 2, Seed::new(40 + s))).collect();
        let ch = KrausChannel::new(ops).unwrap();
        let choi = choi_of(&ch).unwrap();
        let back = kraus_from_choi(&choi).unwrap();
        assert!(back.kraus_ops().len() <= 3);
        let choi2 = choi_of(&back).unwrap();
        assert!((choi.matrix() - choi2.matrix()).fro_norm() <= 1e-9);
    }

    #[test]
    fn kraus_from_choi_rejects_non_psd() {
        let bad = ChoiMatrix::from_square(ComplexMatrix::diag_real(&[1.0, -1.0, 0.0, 1.0])).unwrap();
        assert!(matches!(kraus_from_choi(&bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn choi_apply_matches_map() {
        let ops: Vec<ComplexMatrix> = (0..2).map(|s| random_complex_gaussian(3, 3, Seed::new(s))).collect();
        let ch = KrausChannel::new(ops).unwrap();
        let choi = choi_of(&ch).unwrap();
        let x = random_complex_gaussian(3, 3, Seed::new(99));
        assert!((&choi.apply(&x).unwrap() - &ch.apply(&x).unwrap()).fro_norm() < 1e-12);
    }
}
