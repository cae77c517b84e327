use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;

/// Seed for every random generator in the crate.
///
/// Derived seeds come from a SplitMix64 step over `(value, stream)`, so independent
/// streams (restarts, trials) can be split off one master seed without shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

impl Seed {
    pub const fn new(value: u64) -> Self {
        Self(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub fn derive(self, stream: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Standard complex Gaussian: real and imaginary parts i.i.d. N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_complex_gaussian(rows: usize, cols: usize, seed: Seed) -> ComplexMatrix {
    gaussian_matrix(rows, cols, &mut seed.rng())
}

pub fn random_hermitian(n: usize, seed: Seed) -> ComplexMatrix {
    random_complex_gaussian(n, n, seed).hermitian_part()
}

/// Haar-distributed unitary drawn from an existing generator.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(d, d, rng);
    let (q, r) = qr(&g);
    // fix the phases of R's diagonal so the distribution is Haar
    let phases: Vec<Complex64> = (0..d)
        .map(|i| {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    ComplexMatrix::from_fn(d, d, |i, j| q[(i, j)] * phases[j])
}

pub fn random_haar_unitary(d: usize, seed: Seed) -> ComplexMatrix {
    haar_unitary(d, &mut seed.rng())
}

/// Gram matrix `(v_i^* v_j)` of `k` random unit vectors in `C^k`.
pub fn correlation_from_rng<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ComplexMatrix {
    let vs: Vec<Vec<Complex64>> = (0..k)
        .map(|_| {
            let v: Vec<Complex64> = (0..k).map(|_| complex_gaussian(rng)).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect()
        })
        .collect();
    ComplexMatrix::from_fn(k, k, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            vs[i].iter().zip(&vs[j]).map(|(a, b)| a.conj() * b).sum()
        }
    })
}

pub fn random_correlation(k: usize, seed: Seed) -> ComplexMatrix {
    correlation_from_rng(k, &mut seed.rng())
}

/// Uniformly random unimodular scalar.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(1.0, t)
}

/// Modified Gram-Schmidt QR (applied twice for stability) of a square matrix.
fn qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.cols();
    let m = a.rows();
    let mut q = a.clone();
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 = (0..m).map(|t| q[(t, i)].conj() * q[(t, j)]).sum();
                r[(i, j)] += proj;
                for t in 0..m {
                    let qi = q[(t, i)];
                    q[(t, j)] -= proj * qi;
                }
            }
        }
        let nrm = (0..m).map(|t| q[(t, j)].norm_sqr()).sum::<f64>().sqrt();
        r[(j, j)] = Complex64::new(nrm, 0.0);
        for t in 0..m {
            q[(t, j)] /= nrm;
        }
    }
    (q, r)
}
