//! Dense complex linear algebra used by every other module: Hermitian and
//! unitary eigendecompositions, exact exponentials of Hermitian generators,
//! polar re-orthonormalization and complement extension.

mod eigen;
mod matrix;
pub mod random;

use num_complex::Complex;

pub(crate) use eigen::{fix_column_phase, jacobi};
pub use eigen::{hermitian_eig, unitary_eig, HermitianEigen, UnitaryEigen};
pub use matrix::{basis_vector, inner, norm, ComplexMatrix};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute tolerances for the structural checks performed on inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig<R> {
    pub hermiticity_tol: R,
    pub unitarity_tol: R,
    pub rank_tol: R,
}

impl<R: Real> ToleranceConfig<R> {
    pub fn new(hermiticity_tol: R, unitarity_tol: R, rank_tol: R) -> Result<Self> {
        for (name, t) in
            [("hermiticity_tol", hermiticity_tol), ("unitarity_tol", unitarity_tol), ("rank_tol", rank_tol)]
        {
            if !(t > R::zero()) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite")));
            }
        }
        Ok(Self { hermiticity_tol, unitarity_tol, rank_tol })
    }
}

impl<R: Real> Default for ToleranceConfig<R> {
    fn default() -> Self {
        Self { hermiticity_tol: R::tol(1e-10), unitarity_tol: R::tol(1e-10), rank_tol: R::tol(1e-10) }
    }
}

/// `e^{-i s H}` for Hermitian `H`, evaluated through its eigendecomposition.
pub fn expm_i<R: Real>(h: &ComplexMatrix<R>, s: R, tol: &ToleranceConfig<R>) -> Result<ComplexMatrix<R>> {
    h.check_hermitian(tol.hermiticity_tol)?;
    Ok(expm_i_unchecked(h, s))
}

pub(crate) fn expm_i_unchecked<R: Real>(h: &ComplexMatrix<R>, s: R) -> ComplexMatrix<R> {
    if s == R::zero() {
        return ComplexMatrix::identity(h.rows());
    }
    let (values, vectors) = jacobi(&h.hermitian_part());
    HermitianEigen { eigenvalues: values, eigenvectors: vectors }.exp_i(s)
}

/// Column-orthonormal matrix nearest to `m` in Frobenius norm,
/// `M (M^dagger M)^{-1/2}`.
pub fn polar_orthonormalize<R: Real>(m: &ComplexMatrix<R>, tol: &ToleranceConfig<R>) -> Result<ComplexMatrix<R>> {
    if m.cols() > m.rows() {
        return Err(Error::RankDeficient { smallest: 0.0, tol: tol.rank_tol.to_f64_lossy() });
    }
    let gram = (&m.adjoint() * m).hermitian_part();
    let (values, vectors) = jacobi(&gram);
    let smallest = values.first().copied().unwrap_or(R::zero()).max(R::zero()).sqrt();
    if !(smallest > tol.rank_tol) {
        return Err(Error::RankDeficient { smallest: smallest.to_f64_lossy(), tol: tol.rank_tol.to_f64_lossy() });
    }
    let inv_sqrt: Vec<Complex<R>> = values.iter().map(|&l| Complex::new(R::one() / l.sqrt(), R::zero())).collect();
    let root = HermitianEigen { eigenvalues: values, eigenvectors: vectors }.reconstruct_with(&inv_sqrt);
    let q = m * &root;
    // One Newton-Schulz step, Q (3I - Q^dagger Q) / 2; its fixed point is the
    // same polar factor and it squares the residual orthonormality error.
    let n = q.cols();
    let g = &q.adjoint() * &q;
    let corr = (&ComplexMatrix::identity(n).scale(R::lit(3.0)) - &g).scale(R::lit(0.5));
    Ok(&q * &corr)
}

/// Extends the orthonormal columns of `frame` by `count` vectors drawn from
/// `pool` with Gram-Schmidt in column order.
///
/// Candidates whose residual after projection is below `rank_tol` are
/// skipped. Each accepted vector has its first significant component made
/// real positive.
pub fn orthonormal_extension<R: Real>(
    frame: &ComplexMatrix<R>,
    pool: &ComplexMatrix<R>,
    count: usize,
    tol: &ToleranceConfig<R>,
) -> Result<Vec<Vec<Complex<R>>>> {
    if frame.rows() != pool.rows() {
        return Err(Error::DimensionMismatch(format!("frame has {} rows but pool has {}", frame.rows(), pool.rows())));
    }
    let mut basis: Vec<Vec<Complex<R>>> = frame.columns();
    let mut found = Vec::with_capacity(count);
    for j in 0..pool.cols() {
        if found.len() == count {
            break;
        }
        let mut r = pool.column(j);
        // Two Gram-Schmidt passes keep the result orthogonal to roundoff.
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &r);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri = *ri - *bi * c;
                }
            }
        }
        let nr = norm(&r);
        if nr < tol.rank_tol {
            continue;
        }
        let mut col = ComplexMatrix::from_columns(&[r.iter().map(|z| *z / nr).collect()])?;
        fix_column_phase(&mut col, 0);
        let v = col.column(0);
        basis.push(v.clone());
        found.push(v);
    }
    if found.len() < count {
        return Err(Error::InsufficientComplement { needed: count, found: found.len() });
    }
    Ok(found)
}
