//! Seeded random operators for tests, falsification sweeps and loop generation.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{inner, norm, ComplexMatrix};
use crate::scalar::Real;

fn gaussian<R: Real, G: Rng + ?Sized>(rng: &mut G) -> Complex<R> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(R::lit(re), R::lit(im))
}

/// Hermitian matrix `(G + G^dagger)/2` with standard complex Gaussian `G`.
pub fn random_hermitian<R: Real, G: Rng + ?Sized>(n: usize, rng: &mut G) -> ComplexMatrix<R> {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng)).hermitian_part()
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with the phases of the triangular diagonal absorbed into `Q`.
pub fn random_unitary<R: Real, G: Rng + ?Sized>(n: usize, rng: &mut G) -> ComplexMatrix<R> {
    random_isometry(n, n, rng)
}

/// `d x n` matrix with orthonormal columns, Haar-distributed.
pub fn random_isometry<R: Real, G: Rng + ?Sized>(d: usize, n: usize, rng: &mut G) -> ComplexMatrix<R> {
    assert!(n <= d, "an isometry needs n <= d");
    let mut cols: Vec<Vec<Complex<R>>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex<R>> = (0..d).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for b in &cols {
                let c = inner(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi = *vi - *bi * c;
                }
            }
        }
        let nv = norm(&v);
        if nv < R::lit(1e-8) {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / nv).collect());
    }
    ComplexMatrix::from_columns(&cols).expect("finite Gaussian columns")
}
