//! Dense vectors, matrices, slice kernels, and a Cholesky factorization.
//!
//! Everything here is deliberately plain: row-major storage, single-threaded
//! kernels, no BLAS. The solvers only need matrix-vector products, small
//! Gram matrices, and positive-definite solves.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite real vector. Construction rejects NaN and infinities, so every
/// downstream operation can assume finite inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVec<T>(Vec<T>);

impl<T: Scalar> DenseVec<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    /// Wraps solver output, mapping any non-finite entry to a solver error.
    pub(crate) fn from_solver(values: Vec<T>, context: &str) -> Result<Self> {
        Self::new(values).map_err(|_| Error::Solver(format!("non-finite iterate in {context}")))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for DenseVec<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> AsRef<[T]> for DenseVec<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Slice kernels
// ---------------------------------------------------------------------------

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn nrm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm1<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `y += alpha * x`.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `||a - b||`.
pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Dense matrix (row-major)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// `A v`.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v`.
    pub fn tr_matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        out
    }

    /// Extracts rows by index into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Mat<T> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Mat {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

// ---------------------------------------------------------------------------
// Column block (column-major): a gathered set of matrix columns
// ---------------------------------------------------------------------------

/// `m x k` block stored column-major; used for the reduced Newton systems
/// where only the active columns of the design matrix participate.
#[derive(Clone, Debug)]
pub struct ColBlock<T> {
    m: usize,
    k: usize,
    data: Vec<T>,
}

impl<T: Scalar> ColBlock<T> {
    pub fn new(m: usize, k: usize) -> Self {
        Self {
            m,
            k,
            data: vec![T::zero(); m * k],
        }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.k
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    /// `B w` for `w` of length `k`.
    pub fn matvec(&self, w: &[T]) -> Vec<T> {
        debug_assert_eq!(w.len(), self.k);
        let mut out = vec![T::zero(); self.m];
        for (j, &wj) in w.iter().enumerate() {
            axpy(wj, self.col(j), &mut out);
        }
        out
    }

    /// `Bᵀ v` for `v` of length `m`.
    pub fn tr_matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.m);
        (0..self.k).map(|j| dot(self.col(j), v)).collect()
    }

    /// `B (Bᵀ v)` without forming the product matrix.
    pub fn gram_apply(&self, v: &[T]) -> Vec<T> {
        self.matvec(&self.tr_matvec(v))
    }

    /// Lower triangle of `BᵀB` as a dense symmetric matrix.
    pub fn gram(&self) -> Mat<T> {
        let mut g = Mat::zeros(self.k, self.k);
        for i in 0..self.k {
            for j in 0..=i {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Per-row squared norms, i.e. the diagonal of `BBᵀ`.
    pub fn row_sq_norms(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.m];
        for j in 0..self.k {
            for (di, &x) in d.iter_mut().zip(self.col(j)) {
                *di += x * x;
            }
        }
        d
    }
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    // Packed lower triangle, row by row.
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors the symmetric matrix `a` (only the lower triangle is read).
    pub fn factor(a: &Mat<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimMismatch("cholesky needs a square matrix".into()));
        }
        let mut l = vec![T::zero(); n * (n + 1) / 2];
        let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(Error::Solver(format!(
                            "cholesky breakdown at pivot {i}: {s}"
                        )));
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = rhs`.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        debug_assert_eq!(rhs.len(), self.n);
        let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
        let mut x = rhs.to_vec();
        // Forward: L y = rhs
        for i in 0..self.n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.l[idx(i, j)] * x[j];
            }
            x[i] = s / self.l[idx(i, i)];
        }
        // Backward: Lᵀ x = y
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for j in i + 1..self.n {
                s -= self.l[idx(j, i)] * x[j];
            }
            x[i] = s / self.l[idx(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn densevec_rejects_non_finite() {
        assert!(DenseVec::new(vec![1.0, f64::NAN]).is_err());
        assert!(DenseVec::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseVec::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn matvec_and_transpose_agree_with_manual() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn cholesky_solves_random_spd_system() {
        let mut rng = SplitMix64::new(42);
        let n = 20;
        let mut g = Mat::zeros(n, n);
        // G = B Bᵀ + I with random B
        let b: Vec<f64> = (0..n * n).map(|_| rng.next_gaussian()).collect();
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    s += b[i * n + k] * b[j * n + k];
                }
                g.set(i, j, s);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let chol = Cholesky::factor(&g).unwrap();
        let x = chol.solve(&rhs);
        let res = sub(&g.matvec(&x), &rhs);
        assert!(nrm2(&res) / nrm2(&rhs) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(Cholesky::factor(&a).is_err());
    }

    #[test]
    fn colblock_gram_matches_explicit() {
        let mut blk = ColBlock::new(3, 2);
        blk.col_mut(0).copy_from_slice(&[1.0, 2.0, 3.0]);
        blk.col_mut(1).copy_from_slice(&[0.0, -1.0, 1.0]);
        let g = blk.gram();
        assert_eq!(g.get(0, 0), 14.0);
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.get(1, 1), 2.0);
        let v = [1.0, 1.0, 1.0];
        let got = blk.gram_apply(&v);
        // B Bᵀ v computed by hand
        assert_eq!(got, vec![6.0, 12.0, 18.0]);
    }
}
