//! Dense matrices over exact rationals.
//!
//! Sizes in this crate stay at desk scale (at most 12×12 ambient
//! dimension), so everything is dense and row-major. Determinants and
//! ranks go through fraction-free Bareiss elimination on a
//! denominator-cleared integer copy, which keeps intermediate
//! coefficient growth polynomial. Solving and kernels use exact
//! Gauss-Jordan over the rationals.

use num::bigint::BigInt;
use num::{Integer, One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::Error;
use crate::scalar::Scalar;

/// A dense `rows × cols` matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Scalar>>", into = "Vec<Vec<Scalar>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        // Zero-column matrices legitimately arise as empty spans.
        assert!(rows > 0, "matrix must have at least one row");
        Matrix {
            rows,
            cols,
            entries: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        assert!(!rows.is_empty(), "matrix must have at least one row");
        let n_rows = rows.len();
        let cols = rows[0].len();
        assert!(cols > 0 && rows.iter().all(|r| r.len() == cols));
        Matrix {
            rows: n_rows,
            cols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Integer literal rows, the workhorse of fixtures.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect())
                .collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[Scalar]) -> Self {
        Matrix::from_fn(v.len(), 1, |i, _| v[i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * c)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows[i], cols[j])].clone()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Scalar::is_zero)
    }

    pub fn pow(&self, mut n: u32) -> Matrix {
        assert!(self.is_square());
        let mut result = Matrix::identity(self.rows);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        result
    }

    pub fn trace(&self) -> Scalar {
        assert!(self.is_square());
        let mut t = Scalar::zero();
        for i in 0..self.rows {
            t += &self[(i, i)];
        }
        t
    }

    /// Exact determinant by fraction-free (Bareiss) elimination on a
    /// denominator-cleared integer copy.
    pub fn det(&self) -> Result<Scalar, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Clear denominators row by row, tracking the correction factor.
        let mut work: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        let mut scale = Scalar::one();
        for i in 0..n {
            let mut lcm = BigInt::one();
            for j in 0..n {
                lcm = lcm.lcm(self[(i, j)].denom());
            }
            scale = scale * Scalar::from_big(BigInt::one(), lcm.clone());
            work.push(
                (0..n)
                    .map(|j| {
                        let e = &self[(i, j)];
                        e.numer() * (&lcm / e.denom())
                    })
                    .collect(),
            );
        }

        let mut sign = 1i64;
        let mut prev = BigInt::one();
        for k in 0..n {
            if work[k][k].is_zero() {
                match (k + 1..n).find(|&i| !work[i][k].is_zero()) {
                    Some(i) => {
                        work.swap(k, i);
                        sign = -sign;
                    }
                    None => return Ok(Scalar::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &work[i][j] * &work[k][k] - &work[i][k] * &work[k][j];
                    debug_assert!((&num % &prev).is_zero());
                    work[i][j] = num / &prev;
                }
                work[i][k] = BigInt::zero();
            }
            prev = work[k][k].clone();
        }
        let det_int = work[n - 1][n - 1].clone();
        Ok(Scalar::from_big(det_int * BigInt::from(sign), BigInt::one()) * scale)
    }

    /// Row-reduce in place; returns pivot column indices.
    fn gauss_jordan(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            for j in c..self.cols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in c..self.cols {
                        let v = &self[(i, j)] - &(&f * &self[(r, j)]);
                        self[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let (a_idx, b_idx) = (a * self.cols + j, b * self.cols + j);
            self.entries.swap(a_idx, b_idx);
        }
    }

    /// Exact rank.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.gauss_jordan().len()
    }

    /// One exact solution of `self · x = rhs` (free variables set to 0),
    /// or `None` when the system is inconsistent.
    pub fn solve(&self, rhs: &Matrix) -> Result<Option<Matrix>, Error> {
        if self.rows != rhs.rows {
            return Err(Error::Dimension(format!(
                "solve: {}x{} vs rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut aug = self.hstack(rhs);
        let pivots = aug.gauss_jordan();
        // Any pivot in the rhs block signals inconsistency.
        if pivots.iter().any(|&c| c >= self.cols) {
            return Ok(None);
        }
        let mut x = Matrix::zeros(self.cols, rhs.cols);
        for (r, &c) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x[(c, j)] = aug[(r, self.cols + j)].clone();
            }
        }
        Ok(Some(x))
    }

    /// Column basis of the kernel `{x : self · x = 0}`.
    pub fn kernel(&self) -> Matrix {
        let mut work = self.clone();
        let pivots = work.gauss_jordan();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        if free.is_empty() {
            // Rank-deficient callers check cols(); a 0-column matrix is not
            // representable, so return a cols×0 stand-in via an Option-free
            // convention: a matrix with zero columns is encoded as empty.
            return Matrix {
                rows: self.cols.max(1),
                cols: 0,
                entries: Vec::new(),
            };
        }
        let mut basis = Matrix::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            basis[(f, k)] = Scalar::one();
            for (r, &c) in pivots.iter().enumerate() {
                basis[(c, k)] = -&work[(r, f)];
            }
        }
        basis
    }

    /// Exact inverse; errors on non-square or singular input.
    pub fn inverse(&self) -> Result<Matrix, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        match self.solve(&Matrix::identity(self.rows))? {
            Some(inv) if self.rank() == self.rows => Ok(inv),
            _ => Err(Error::Singular),
        }
    }

    /// Entrywise map to doubles, for the approximate spectral bridge.
    pub fn to_f64_vec(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(Scalar::to_f64).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.entries[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += &(a * b);
                    }
                }
            }
        }
        out
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        &self * &rhs
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| -&self[(i, j)])
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            writeln!(
                f,
                "  [{}]",
                self.row(i)
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )?;
        }
        write!(f, "]")
    }
}

impl From<Matrix> for Vec<Vec<Scalar>> {
    fn from(m: Matrix) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<Scalar>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<Scalar>>) -> Result<Self, Error> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Parse("empty matrix".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        Ok(Matrix::from_rows(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{s, sf};
    use proptest::prelude::*;

    #[test]
    fn det_two_by_two() {
        // Cofactor expansion by hand: 1*4 - 2*3 = -2.
        let m = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.det().unwrap(), s(-2));
    }

    #[test]
    fn det_identity_and_singular() {
        assert_eq!(Matrix::identity(6).det().unwrap(), s(1));
        let m = Matrix::from_i64(&[&[1, 1], &[1, 1]]);
        assert_eq!(m.det().unwrap(), s(0));
    }

    #[test]
    fn det_rational_entries() {
        let m = Matrix::from_rows(vec![vec![sf(1, 2), sf(1, 3)], vec![sf(1, 5), sf(1, 7)]]);
        assert_eq!(m.det().unwrap(), sf(1, 14) - sf(1, 15));
    }

    #[test]
    fn det_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(m.det(), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn solve_examples() {
        let id = Matrix::identity(3);
        let v = Matrix::col_vec(&[s(1), s(2), s(3)]);
        assert_eq!(id.solve(&v).unwrap().unwrap(), v);

        let a = Matrix::from_i64(&[&[2]]);
        let b = Matrix::from_i64(&[&[1]]);
        assert_eq!(a.solve(&b).unwrap().unwrap()[(0, 0)], sf(1, 2));

        // 0·x = 1 is inconsistent.
        let a = Matrix::from_i64(&[&[0]]);
        assert!(a.solve(&b).unwrap().is_none());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::zeros(3, 3).rank(), 0);
        assert_eq!(Matrix::identity(5).rank(), 5);
        // Second row is twice the first.
        assert_eq!(Matrix::from_i64(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn kernel_basis_annihilates() {
        let m = Matrix::from_i64(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = m.kernel();
        assert_eq!(k.cols(), 2);
        assert!((&m * &k).is_zero());
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix::from_i64(&[&[2, 1], &[7, 4]]);
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Matrix::identity(2));
        assert!(Matrix::from_i64(&[&[1, 1], &[1, 1]]).inverse().is_err());
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-6i64..=6, n * n).prop_map(move |v| {
            Matrix::from_fn(n, n, |i, j| Scalar::from_int(v[i * n + j]))
        })
    }

    proptest! {
        #[test]
        fn det_is_multiplicative(a in small_matrix(4), b in small_matrix(4)) {
            let lhs = (&a * &b).det().unwrap();
            let rhs = a.det().unwrap() * b.det().unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn rank_nullity(a in small_matrix(4)) {
            let k = a.kernel();
            prop_assert_eq!(a.rank() + k.cols(), a.cols());
        }
    }
}
