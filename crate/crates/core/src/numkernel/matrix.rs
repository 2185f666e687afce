use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> ComplexMatrix<R> {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex<R>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data: entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(R::zero(), R::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested `f64` rows. Intended for literals in tests and
    /// the gate library.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| Complex::new(R::lit(rows[i][j]), R::zero()))
    }

    pub fn from_diagonal(diag: &[Complex<R>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// Stacks equally long column vectors side by side.
    pub fn from_columns(columns: &[Vec<Complex<R>>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let m = Self::from_fn(rows, columns.len(), |i, j| columns[j][i]);
        Self::new(m.rows, m.cols, m.data)
    }

    /// Rank-one operator |u><v|.
    pub fn outer(u: &[Complex<R>], v: &[Complex<R>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Complex<R>>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Complex<R>]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: R) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: Complex<R>) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex<R>) -> Complex<R>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| f(*z)).collect() }
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Complex::new(R::zero(), R::zero()), |a, b| a + b)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> R {
        self.data.iter().map(|z| z.norm()).fold(R::zero(), R::max)
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt()
    }

    pub fn mul_vec(&self, x: &[Complex<R>]) -> Vec<Complex<R>> {
        assert_eq!(x.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).fold(Complex::new(R::zero(), R::zero()), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `max |M - M^dagger|`, or infinity for non-square input.
    pub fn hermiticity_deviation(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        let n = self.rows;
        let mut dev = R::zero();
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `max |M^dagger M - I|` (columns orthonormal iff zero).
    pub fn isometry_deviation(&self) -> R {
        let g = &self.adjoint() * self;
        (&g - &Self::identity(self.cols)).max_abs()
    }

    pub fn check_hermitian(&self, tol: R) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", self.rows, self.cols)));
        }
        let deviation = self.hermiticity_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation: deviation.to_f64_lossy(), tol: tol.to_f64_lossy() });
        }
        Ok(())
    }

    pub fn check_unitary(&self, tol: R) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", self.rows, self.cols)));
        }
        let deviation = self.isometry_deviation();
        if !(deviation <= tol) {
            return Err(Error::NotUnitary { deviation: deviation.to_f64_lossy(), tol: tol.to_f64_lossy() });
        }
        Ok(())
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(R::lit(0.5))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Converts the scalar type, e.g. for an `f32` copy of an `f64` operator.
    pub fn cast<S: Real>(&self) -> ComplexMatrix<S> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(S::lit(z.re.to_f64_lossy()), S::lit(z.im.to_f64_lossy())))
                .collect(),
        }
    }
}

impl<R> Index<(usize, usize)> for ComplexMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for ComplexMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, R: Real> Mul<&'a ComplexMatrix<R>> for &'a ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn mul(self, rhs: &'a ComplexMatrix<R>) -> ComplexMatrix<R> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = ComplexMatrix::zeros(n, p);
        for i in 0..n {
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == R::zero() && a.im == R::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * *b;
                }
            }
        }
        out
    }
}

impl<'a, R: Real> Add<&'a ComplexMatrix<R>> for &'a ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn add(self, rhs: &'a ComplexMatrix<R>) -> ComplexMatrix<R> {
        assert!(self.same_shape(rhs), "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<'a, R: Real> Sub<&'a ComplexMatrix<R>> for &'a ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn sub(self, rhs: &'a ComplexMatrix<R>) -> ComplexMatrix<R> {
        assert!(self.same_shape(rhs), "matrix difference shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<R: Real> Neg for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn neg(self) -> ComplexMatrix<R> {
        self.map(|z| -z)
    }
}

impl<R: Real> fmt::Debug for ComplexMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// `<a|b>` with the first argument conjugated.
pub fn inner<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> Complex<R> {
    assert_eq!(a.len(), b.len(), "inner product length mismatch");
    a.iter().zip(b).fold(Complex::new(R::zero(), R::zero()), |acc, (x, y)| acc + x.conj() * *y)
}

pub fn norm<R: Real>(a: &[Complex<R>]) -> R {
    a.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt()
}

/// Standard basis vector `|k>` in `C^dim`.
pub fn basis_vector<R: Real>(dim: usize, k: usize) -> Vec<Complex<R>> {
    let mut v = vec![Complex::new(R::zero(), R::zero()); dim];
    v[k] = Complex::new(R::one(), R::zero());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    #[test]
    fn rejects_bad_lengths_and_nan() {
        assert!(matches!(M::new(2, 2, vec![Complex::new(0.0, 0.0); 3]), Err(Error::DimensionMismatch(_))));
        let mut e = vec![Complex::new(0.0, 0.0); 4];
        e[2] = Complex::new(f64::NAN, 0.0);
        assert_eq!(M::new(2, 2, e), Err(Error::NonFinite));
        let mut e = vec![Complex::new(0.0, 0.0); 4];
        e[1] = Complex::new(0.0, f64::INFINITY);
        assert_eq!(M::new(2, 2, e), Err(Error::NonFinite));
    }

    #[test]
    fn product_and_adjoint() {
        let a = M::from_fn(2, 3, |i, j| Complex::new(i as f64 + 1.0, j as f64));
        let b = a.adjoint();
        let g = &a * &b;
        assert_eq!(g.rows(), 2);
        assert!(g.hermiticity_deviation() < 1e-14);
        assert_eq!(a[(1, 2)], Complex::new(2.0, 2.0));
        assert_eq!(b[(2, 1)], Complex::new(2.0, -2.0));
    }

    #[test]
    fn pauli_commutator() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let z = M::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        // [X, Z] = -2iY
        let c = x.commutator(&z);
        assert!((c[(0, 1)] - Complex::new(-2.0, 0.0)).norm() < 1e-15);
        assert!((c[(1, 0)] - Complex::new(2.0, 0.0)).norm() < 1e-15);
        assert!(c.hermiticity_deviation() > 1.0);
    }

    #[test]
    fn unitary_check_names_deviation() {
        let m = M::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.5]]);
        match m.check_unitary(1e-10) {
            Err(Error::NotUnitary { deviation, .. }) => assert!((deviation - 1.25).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
