//! Small dense linear algebra: row-major matrices, Cholesky, LU, Householder
//! least squares and the matrix exponential.
//!
//! Everything here is sized for the problems in this crate (at most a few
//! hundred rows), so the routines favour clarity over blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                axpy(a, other_row, out_row);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "vector length does not match columns");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "vector length does not match rows");
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            axpy(*xi, self.row(i), &mut out);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_row_major(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_row_major(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_row_major(
            self.rows,
            self.cols,
            self.data.iter().map(|a| a * s).collect(),
        )
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                if (a - b).abs() > tol * (1.0 + a.abs().max(b.abs())) {
                    return false;
                }
            }
        }
        true
    }

    /// `xᵀ · self · x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `y += a · x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|a| a.abs()).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Returns `None` when a
    /// non-positive pivot shows up.
    pub fn new(a: &Matrix) -> Option<Self> {
        assert!(a.is_square(), "Cholesky of a non-square matrix");
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.solve_in_place(&mut y);
        y
    }

    pub fn solve_in_place(&self, y: &mut [f64]) {
        let n = self.l.rows();
        debug_assert_eq!(y.len(), n);
        for i in 0..n {
            let s = y[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
    }

    /// `L⁻ᵀ`, an upper-triangular matrix.
    pub fn inverse_transpose_factor(&self) -> Matrix {
        let n = self.l.rows();
        // Columns of L⁻¹ by forward substitution, then transpose.
        let mut linv = Matrix::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= self.l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / self.l[(i, i)];
            }
        }
        linv.transpose()
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Returns `None` for a numerically singular matrix.
    pub fn new(a: &Matrix) -> Option<Self> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                if lu[(i, k)].abs() > best {
                    best = lu[(i, k)].abs();
                    p = i;
                }
            }
            if best <= 1e-300 * scale || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Least-squares solution of `A x ≈ b` by Householder QR.
///
/// Returns `None` when `A` has fewer rows than columns or when the triangular
/// factor has a diagonal entry below `rcond` times the largest one.
pub fn least_squares(a: &Matrix, b: &[f64], rcond: f64) -> Option<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if m < n || b.len() != m {
        return None;
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    for k in 0..n {
        let mut norm = 0.0;
        for i in k..m {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = libm::sqrt(norm);
        if norm == 0.0 {
            return None;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                r[(i, j)] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * y[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..m {
            y[i] -= s * v[i - k];
        }
    }
    let dmax = (0..n).fold(0.0_f64, |acc, i| acc.max(r[(i, i)].abs()));
    if (0..n).any(|i| r[(i, i)].abs() <= rcond * dmax) {
        return None;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Some(x)
}

/// Matrix exponential by scaling and squaring around a diagonal [6/6] Padé
/// approximant. The argument is scaled until its 1-norm is at most 1/2, where
/// the truncation error of the approximant is below double precision.
pub fn expm(a: &Matrix) -> Matrix {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.rows();
    let norm = a.norm_one();
    let mut squarings = 0_i32;
    if norm > 0.5 {
        squarings = libm::ceil(libm::log2(norm / 0.5)) as i32;
    }
    let x = a.scale(libm::ldexp(1.0, -squarings));

    // c_k = (2q - k)! q! / ((2q)! k! (q - k)!) with q = 6
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, c) in C.iter().enumerate().skip(1) {
        power = power.matmul(&x);
        let term = power.scale(*c);
        num = num.add(&term);
        den = if k % 2 == 0 {
            den.add(&term)
        } else {
            den.sub(&term)
        };
    }
    let lu = Lu::new(&den).expect("Padé denominator is nonsingular for ‖X‖ ≤ 1/2");
    let mut e = lu.solve_matrix(&num);
    for _ in 0..squarings {
        e = e.matmul(&e);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        assert_eq!(expm(&Matrix::zeros(3, 3)), Matrix::identity(3));
    }

    #[test]
    fn expm_diagonal_matches_scalar_exp() {
        let a = Matrix::diagonal(&[-3.0, 0.25, 4.0]);
        let e = expm(&a);
        for (i, d) in [-3.0_f64, 0.25, 4.0].iter().enumerate() {
            let want = libm::exp(*d);
            assert!((e[(i, i)] - want).abs() <= 1e-13 * want);
        }
    }

    #[test]
    fn expm_rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation by t.
        let t = 2.7;
        let e = expm(&Matrix::from_rows(&[&[0.0, -t], &[t, 0.0]]));
        assert!((e[(0, 0)] - libm::cos(t)).abs() < 1e-13);
        assert!((e[(1, 0)] - libm::sin(t)).abs() < 1e-13);
    }

    #[test]
    fn expm_nilpotent_is_exact_polynomial() {
        let a = Matrix::from_rows(&[&[0.0, 3.0, 1.0], &[0.0, 0.0, 2.0], &[0.0, 0.0, 0.0]]);
        let e = expm(&a);
        // I + A + A²/2
        let want = Matrix::from_rows(&[&[1.0, 3.0, 4.0], &[0.0, 1.0, 2.0], &[0.0, 0.0, 1.0]]);
        assert!(e.sub(&want).max_abs() < 1e-14);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, want) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - want).abs() < 1e-13);
        }
        let jt = ch.inverse_transpose_factor();
        // J Jᵀ = A⁻¹  ⇒  A J Jᵀ = I
        let prod = a.matmul(&jt.matmul(&jt.transpose()));
        assert!(prod.sub(&Matrix::identity(3)).max_abs() < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn lu_solves_general_system() {
        let a = Matrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let lu = Lu::new(&a).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        let back = a.mul_vec(&x);
        for (b, want) in back.iter().zip([3.0, 2.0, 4.0]) {
            assert!((b - want).abs() < 1e-13);
        }
        assert!(Lu::new(&Matrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let mut a = Matrix::zeros(6, 2);
        let mut b = vec![0.0; 6];
        for i in 0..6 {
            let t = i as f64;
            a[(i, 0)] = t;
            a[(i, 1)] = 1.0;
            b[i] = 2.5 * t - 1.0;
        }
        let x = least_squares(&a, &b, 1e-12).unwrap();
        assert!((x[0] - 2.5).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_flags_rank_deficiency() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(least_squares(&a, &[1.0, 2.0, 3.0], 1e-10).is_none());
    }
}
