//! Hermitian and unitary eigendecompositions.
//!
//! Both are built on a cyclic complex Jacobi sweep. Each rotation first
//! removes the phase of the pivot entry and then applies the classical real
//! Jacobi rotation, so the accumulated eigenvector matrix stays unitary to
//! working precision.

use std::cmp::Ordering;

use num_complex::Complex;

use super::matrix::ComplexMatrix;
use super::ToleranceConfig;
use crate::error::Result;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen<R: Real> {
    pub eigenvalues: Vec<R>,
    pub eigenvectors: ComplexMatrix<R>,
}

impl<R: Real> HermitianEigen<R> {
    /// `e^{-i s M}` from the cached decomposition.
    pub fn exp_i(&self, s: R) -> ComplexMatrix<R> {
        let phases: Vec<Complex<R>> = self.eigenvalues.iter().map(|&l| Complex::from_polar(R::one(), -s * l)).collect();
        self.reconstruct_with(&phases)
    }

    /// `W f(D) W^dagger` for diagonal weights `f(D)`.
    pub fn reconstruct_with(&self, weights: &[Complex<R>]) -> ComplexMatrix<R> {
        let w = &self.eigenvectors;
        let n = w.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, lam) in weights.iter().enumerate() {
            for i in 0..n {
                let wik = w[(i, k)] * *lam;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + wik * w[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<R> {
        let d: Vec<Complex<R>> = self.eigenvalues.iter().map(|&l| Complex::new(l, R::zero())).collect();
        self.reconstruct_with(&d)
    }
}

/// Unit-modulus eigenvalues sorted by phase in `[0, 2pi)`.
#[derive(Debug, Clone)]
pub struct UnitaryEigen<R: Real> {
    pub eigenvalues: Vec<Complex<R>>,
    pub eigenvectors: ComplexMatrix<R>,
}

pub fn hermitian_eig<R: Real>(m: &ComplexMatrix<R>, tol: &ToleranceConfig<R>) -> Result<HermitianEigen<R>> {
    m.check_hermitian(tol.hermiticity_tol)?;
    let (values, mut vectors) = jacobi(&m.hermitian_part());
    for j in 0..vectors.cols() {
        fix_column_phase(&mut vectors, j);
    }
    Ok(HermitianEigen { eigenvalues: values, eigenvectors: vectors })
}

/// Diagonalizes a unitary through the commuting Hermitian pair
/// `X = (U + U^dagger)/2`, `Y = (U - U^dagger)/2i`.
///
/// Eigenvectors of `X` are grouped where its eigenvalues cluster (this is
/// where `e^{i theta}` and `e^{-i theta}` collide) and `Y` is diagonalized on
/// each cluster.
pub fn unitary_eig<R: Real>(u: &ComplexMatrix<R>, tol: &ToleranceConfig<R>) -> Result<UnitaryEigen<R>> {
    u.check_unitary(tol.unitarity_tol)?;
    let n = u.rows();
    let ud = u.adjoint();
    let x = (u + &ud).scale(R::lit(0.5));
    let y = (u - &ud).scale_complex(Complex::new(R::zero(), R::lit(-0.5)));
    let (xvals, xvecs) = jacobi(&x);

    let cluster_tol = R::tol(1e-6);
    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xvals[end] - xvals[end - 1] <= cluster_tol {
            end += 1;
        }
        let idx: Vec<usize> = (start..end).collect();
        let q = xvecs.select_columns(&idx);
        let block = if idx.len() == 1 {
            q
        } else {
            let ysub = (&(&q.adjoint() * &y) * &q).hermitian_part();
            let (_, w) = jacobi(&ysub);
            &q * &w
        };
        for (offset, j) in idx.iter().enumerate() {
            vectors.set_column(*j, &block.column(offset));
        }
        start = end;
    }

    for j in 0..n {
        fix_column_phase(&mut vectors, j);
    }
    let mut pairs: Vec<(Complex<R>, Vec<Complex<R>>)> = (0..n)
        .map(|j| {
            let v = vectors.column(j);
            let uv = u.mul_vec(&v);
            let mu = super::matrix::inner(&v, &uv);
            (mu, v)
        })
        .collect();
    pairs.sort_by(|a, b| phase_in_turn(a.0).partial_cmp(&phase_in_turn(b.0)).unwrap_or(Ordering::Equal));
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<Vec<Complex<R>>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(UnitaryEigen { eigenvalues, eigenvectors: ComplexMatrix::from_columns(&cols)? })
}

fn phase_in_turn<R: Real>(z: Complex<R>) -> R {
    let a = z.arg();
    if a < R::zero() {
        a + R::TAU()
    } else {
        a
    }
}

/// Rotates column `j` so its first significant component is real positive.
///
/// "Significant" means modulus above `1e-8`; exact zeros and roundoff-level
/// entries are skipped.
pub(crate) fn fix_column_phase<R: Real>(m: &mut ComplexMatrix<R>, j: usize) {
    let thresh = R::lit(1e-8);
    let pivot = (0..m.rows()).map(|i| m[(i, j)]).find(|z| z.norm() > thresh);
    if let Some(p) = pivot {
        let rot = p.conj() / p.norm();
        for i in 0..m.rows() {
            m[(i, j)] = m[(i, j)] * rot;
        }
    }
}

/// Cyclic Jacobi on a Hermitian matrix (Hermiticity is assumed).
/// Returns ascending eigenvalues and the eigenvector matrix.
pub(crate) fn jacobi<R: Real>(m: &ComplexMatrix<R>) -> (Vec<R>, ComplexMatrix<R>) {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let eps = R::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut off = R::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        if off == R::zero() || off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    (values, v.select_columns(&order))
}

fn rotate<R: Real>(a: &mut ComplexMatrix<R>, v: &mut ComplexMatrix<R>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == R::zero() {
        return;
    }
    let n = a.rows();
    let alpha = a[(p, p)].re;
    let beta = a[(q, q)].re;
    // Negligible pivot relative to both diagonal entries: drop it.
    let g = mag * R::lit(100.0);
    if alpha.abs() + g == alpha.abs() && beta.abs() + g == beta.abs() {
        a[(p, q)] = Complex::new(R::zero(), R::zero());
        a[(q, p)] = Complex::new(R::zero(), R::zero());
        return;
    }
    let phase_conj = apq.conj() / mag;
    let theta = (beta - alpha) / (R::lit(2.0) * mag);
    let sign = if theta < R::zero() { -R::one() } else { R::one() };
    let t = if (theta * theta).is_infinite() {
        R::one() / (R::lit(2.0) * theta)
    } else {
        sign / (theta.abs() + (theta * theta + R::one()).sqrt())
    };
    let c = R::one() / (t * t + R::one()).sqrt();
    let s = t * c;

    let jpp = Complex::new(c, R::zero());
    let jpq = Complex::new(s, R::zero());
    let jqp = phase_conj * (-s);
    let jqq = phase_conj * c;

    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * jpp + y * jqp;
        a[(k, q)] = x * jpq + y * jqq;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = jpp.conj() * x + jqp.conj() * y;
        a[(q, k)] = jpq.conj() * x + jqq.conj() * y;
    }
    a[(p, q)] = Complex::new(R::zero(), R::zero());
    a[(q, p)] = Complex::new(R::zero(), R::zero());
    a[(p, p)] = Complex::new(a[(p, p)].re, R::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, R::zero());

    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * jpp + y * jqp;
        v[(k, q)] = x * jpq + y * jqq;
    }
}
