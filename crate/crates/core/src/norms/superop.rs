use num_complex::Complex64;

use crate::channels::LinearMap;
use crate::error::{Error, Result};
use crate::numkit::random::haar_unitary;
use crate::numkit::{polar, svd, ComplexMatrix, Seed};

/// A linear map on `M_n` stored as its images of the matrix units `E_{a,b}` (row-major in `(a, b)`).
#[derive(Debug, Clone)]
pub struct BasisTable {
    n: usize,
    images: Vec<ComplexMatrix>,
}

impl BasisTable {
    pub fn from_map(map: &impl LinearMap) -> Result<Self> {
        let n = map.dim_in();
        if map.dim_out() != n {
            return Err(Error::ShapeMismatch("basis table needs a map M_n -> M_n".into()));
        }
        let mut images = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                images.push(map.apply(&ComplexMatrix::unit(n, n, a, b))?);
            }
        }
        Ok(Self { n, images })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Table of `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch("basis tables have different sizes".into()));
        }
        Ok(Self {
            n: self.n,
            images: self.images.iter().zip(&other.images).map(|(a, b)| a - b).collect(),
        })
    }

    /// `L^†(Y)` with `L^†(Y)_{a,b} = <L(E_{a,b}), Y>`.
    fn adjoint_apply(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, n, |a, b| self.images[a * n + b].inner(y))
    }
}

impl LinearMap for BasisTable {
    fn dim_in(&self) -> usize {
        self.n
    }

    fn dim_out(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(x)?;
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let xab = x[(a, b)];
                if xab != Complex64::new(0.0, 0.0) {
                    out = &out + &self.images[a * n + b].scale(xab);
                }
            }
        }
        Ok(out)
    }
}

/// Budget for [`superop_norm_lb`].
#[derive(Debug, Clone, Copy)]
pub struct AscentParams {
    /// Random Haar starts on top of the identity and permutation starts.
    pub random_starts: usize,
    pub max_iters: usize,
    pub seed: Seed,
}

impl Default for AscentParams {
    fn default() -> Self {
        Self {
            random_starts: 6,
            max_iters: 200,
            seed: Seed::new(0),
        }
    }
}

/// Lower bound on `sup_{‖X‖ ≤ 1} ‖L(X)‖` by ascent over unitary inputs.
///
/// From each start `X`, take the top singular pair `(u, v)` of `L(X)` and move to the unitary
/// polar factor of `L^†(u v^*)`; since `X ↦ σ_max(L(X))` is convex the value never decreases.
/// Every returned value is `σ_max(L(X))` for an actual unitary `X`, so it never exceeds the norm.
pub fn superop_norm_lb(table: &BasisTable, params: &AscentParams) -> Result<f64> {
    let n = table.n;
    let mut starts = vec![ComplexMatrix::identity(n)];
    // a permutation through the matrix unit with the largest image
    let (best_unit, _) = table
        .images
        .iter()
        .enumerate()
        .map(|(idx, m)| (idx, m.fro_norm()))
        .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let (a, b) = (best_unit / n, best_unit % n);
    let mut perm = ComplexMatrix::identity(n);
    if a != b {
        perm[(a, a)] = Complex64::new(0.0, 0.0);
        perm[(b, b)] = Complex64::new(0.0, 0.0);
        perm[(a, b)] = Complex64::new(1.0, 0.0);
        perm[(b, a)] = Complex64::new(1.0, 0.0);
    }
    starts.push(perm);
    let mut rng = params.seed.rng();
    for _ in 0..params.random_starts {
        starts.push(haar_unitary(n, &mut rng));
    }

    let mut best: f64 = 0.0;
    for x0 in starts {
        best = best.max(ascend(table, x0, params.max_iters)?);
    }
    Ok(best)
}

fn ascend(table: &BasisTable, mut x: ComplexMatrix, max_iters: usize) -> Result<f64> {
    let mut value = 0.0;
    for _ in 0..max_iters {
        let y = table.apply(&x)?;
        let s = svd(&y)?;
        let current = s.values[0];
        if current <= value * (1.0 + 1e-13) && value > 0.0 {
            value = value.max(current);
            break;
        }
        value = value.max(current);
        if current == 0.0 {
            break;
        }
        let u = ComplexMatrix::from_fn(n_of(&s.left), 1, |r, _| s.left[(r, 0)]);
        let v = ComplexMatrix::from_fn(n_of(&s.right), 1, |r, _| s.right[(r, 0)]);
        let g = table.adjoint_apply(&u.mul_adjoint(&v));
        x = polar(&g)?.unitary_factor;
    }
    Ok(value)
}

fn n_of(m: &ComplexMatrix) -> usize {
    m.rows()
}
