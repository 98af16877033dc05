//! Design matrix storage: dense row-major or sparse (CSR with a CSC mirror).
//!
//! The sparse form keeps both orientations because the solvers need fast row
//! products (`Xv`, `Xᵀu`) *and* fast gathering of active columns for the
//! reduced Newton systems.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, ColBlock, Mat};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SparseMat<T> {
    rows: usize,
    cols: usize,
    // CSR
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    // CSC mirror
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_values: Vec<T>,
}

impl<T: Scalar> SparseMat<T> {
    /// Builds from per-row `(column, value)` lists; columns must be strictly
    /// increasing within a row.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for entries in &rows {
            let mut last: Option<usize> = None;
            for &(j, v) in entries {
                if j >= cols {
                    return Err(Error::DimMismatch(format!(
                        "column index {j} out of bounds for {cols} columns"
                    )));
                }
                if let Some(prev) = last {
                    if j <= prev {
                        return Err(Error::InvalidParam(
                            "sparse row entries must have strictly increasing columns".into(),
                        ));
                    }
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite(col_idx.len()));
                }
                last = Some(j);
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }

        // Transpose pass for the CSC mirror.
        let nnz = values.len();
        let mut col_counts = vec![0usize; cols];
        for &j in &col_idx {
            col_counts[j] += 1;
        }
        let mut col_ptr = vec![0usize; cols + 1];
        for j in 0..cols {
            col_ptr[j + 1] = col_ptr[j] + col_counts[j];
        }
        let mut row_idx = vec![0usize; nnz];
        let mut col_values = vec![T::zero(); nnz];
        let mut next = col_ptr.clone();
        for i in 0..nrows {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[k];
                let slot = next[j];
                row_idx[slot] = i;
                col_values[slot] = values[k];
                next[j] += 1;
            }
        }

        Ok(Self {
            rows: nrows,
            cols,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            row_idx,
            col_values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| (j, v))
    }

    fn col_entries(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()]
            .iter()
            .zip(&self.col_values[r])
            .map(|(&i, &v)| (i, v))
    }
}

/// The regression design matrix `X`.
#[derive(Clone, Debug)]
pub enum DesignMatrix<T> {
    Dense(Mat<T>),
    Sparse(SparseMat<T>),
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(a) => a.rows(),
            Self::Sparse(a) => a.rows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(a) => a.cols(),
            Self::Sparse(a) => a.cols,
        }
    }

    /// `X v`.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.ncols());
        match self {
            Self::Dense(a) => a.matvec(v),
            Self::Sparse(a) => (0..a.rows)
                .map(|i| a.row_entries(i).map(|(j, x)| x * v[j]).sum())
                .collect(),
        }
    }

    /// `Xᵀ u`.
    pub fn tr_matvec(&self, u: &[T]) -> Vec<T> {
        debug_assert_eq!(u.len(), self.nrows());
        match self {
            Self::Dense(a) => a.tr_matvec(u),
            Self::Sparse(a) => (0..a.cols)
                .map(|j| a.col_entries(j).map(|(i, x)| x * u[i]).sum())
                .collect(),
        }
    }

    /// Gathers the listed columns into a dense column-major block.
    pub fn gather_cols(&self, idx: &[usize]) -> ColBlock<T> {
        let m = self.nrows();
        let mut blk = ColBlock::new(m, idx.len());
        match self {
            Self::Dense(a) => {
                for (k, &j) in idx.iter().enumerate() {
                    let col = blk.col_mut(k);
                    for i in 0..m {
                        col[i] = a.get(i, j);
                    }
                }
            }
            Self::Sparse(a) => {
                for (k, &j) in idx.iter().enumerate() {
                    let col = blk.col_mut(k);
                    for (i, v) in a.col_entries(j) {
                        col[i] = v;
                    }
                }
            }
        }
        blk
    }

    /// Squared Euclidean norms of all columns.
    pub fn col_sq_norms(&self) -> Vec<T> {
        match self {
            Self::Dense(a) => {
                let mut out = vec![T::zero(); a.cols()];
                for i in 0..a.rows() {
                    for (o, &x) in out.iter_mut().zip(a.row(i)) {
                        *o += x * x;
                    }
                }
                out
            }
            Self::Sparse(a) => (0..a.cols)
                .map(|j| a.col_entries(j).map(|(_, x)| x * x).sum())
                .collect(),
        }
    }

    /// Cheap upper bound on the spectral norm:
    /// `sqrt(max column abs sum · max row abs sum)`.
    pub fn spectral_bound(&self) -> T {
        let m = self.nrows();
        let n = self.ncols();
        let mut row_sums = vec![T::zero(); m];
        let mut col_sums = vec![T::zero(); n];
        match self {
            Self::Dense(a) => {
                for i in 0..m {
                    for (j, &x) in a.row(i).iter().enumerate() {
                        row_sums[i] += x.abs();
                        col_sums[j] += x.abs();
                    }
                }
            }
            Self::Sparse(a) => {
                for i in 0..m {
                    for (j, x) in a.row_entries(i) {
                        row_sums[i] += x.abs();
                        col_sums[j] += x.abs();
                    }
                }
            }
        }
        let rmax = row_sums.iter().fold(T::zero(), |acc, &x| acc.max(x));
        let cmax = col_sums.iter().fold(T::zero(), |acc, &x| acc.max(x));
        (rmax * cmax).sqrt()
    }

    /// Dense `I_n + XᵀX`.
    pub fn gram_n(&self) -> Mat<T> {
        let n = self.ncols();
        let mut g = Mat::zeros(n, n);
        match self {
            Self::Dense(a) => {
                for r in 0..a.rows() {
                    let row = a.row(r);
                    for i in 0..n {
                        let xi = row[i];
                        if xi == T::zero() {
                            continue;
                        }
                        for j in 0..=i {
                            let v = g.get(i, j) + xi * row[j];
                            g.set(i, j, v);
                        }
                    }
                }
            }
            Self::Sparse(a) => {
                for r in 0..a.rows {
                    let lo = a.row_ptr[r];
                    let hi = a.row_ptr[r + 1];
                    for p in lo..hi {
                        let (i, xi) = (a.col_idx[p], a.values[p]);
                        for q in lo..=p {
                            let (j, xj) = (a.col_idx[q], a.values[q]);
                            let v = g.get(i, j) + xi * xj;
                            g.set(i, j, v);
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.set(j, i, g.get(i, j));
            }
            g.set(i, i, g.get(i, i) + T::one());
        }
        g
    }

    /// Dense `I_m + XXᵀ`.
    pub fn gram_m(&self) -> Mat<T> {
        let m = self.nrows();
        let mut g = Mat::zeros(m, m);
        match self {
            Self::Dense(a) => {
                for i in 0..m {
                    for j in 0..=i {
                        g.set(i, j, dot(a.row(i), a.row(j)));
                    }
                }
            }
            Self::Sparse(a) => {
                // Accumulate column outer products; columns are sparse.
                for j in 0..a.cols {
                    let r = a.col_ptr[j]..a.col_ptr[j + 1];
                    let rows = &a.row_idx[r.clone()];
                    let vals = &a.col_values[r];
                    for (pi, &ri) in rows.iter().enumerate() {
                        for (pj, &rj) in rows.iter().enumerate().take(pi + 1) {
                            let v = g.get(ri.max(rj), ri.min(rj)) + vals[pi] * vals[pj];
                            g.set(ri.max(rj), ri.min(rj), v);
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                g.set(j, i, g.get(i, j));
            }
            g.set(i, i, g.get(i, i) + T::one());
        }
        g
    }

    /// Returns a copy with column `j` multiplied by `scales[j]`.
    pub fn scale_cols(&self, scales: &[T]) -> DesignMatrix<T> {
        debug_assert_eq!(scales.len(), self.ncols());
        match self {
            Self::Dense(a) => {
                let mut out = a.clone();
                for i in 0..a.rows() {
                    for (v, &s) in out.row_mut(i).iter_mut().zip(scales) {
                        *v *= s;
                    }
                }
                Self::Dense(out)
            }
            Self::Sparse(a) => {
                let rows = (0..a.rows)
                    .map(|i| a.row_entries(i).map(|(j, v)| (j, v * scales[j])).collect())
                    .collect();
                Self::Sparse(SparseMat::from_rows(a.cols, rows).expect("valid scaled matrix"))
            }
        }
    }

    /// Row submatrix (used by splits and cross validation).
    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix<T> {
        match self {
            Self::Dense(a) => Self::Dense(a.select_rows(idx)),
            Self::Sparse(a) => {
                let rows = idx
                    .iter()
                    .map(|&i| a.row_entries(i).collect::<Vec<_>>())
                    .collect();
                Self::Sparse(SparseMat::from_rows(a.cols, rows).expect("valid submatrix"))
            }
        }
    }

    /// Densifies (small matrices only; used by tests and oracles).
    pub fn to_dense(&self) -> Mat<T> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Sparse(a) => {
                let mut out = Mat::zeros(a.rows, a.cols);
                for i in 0..a.rows {
                    for (j, v) in a.row_entries(i) {
                        out.set(i, j, v);
                    }
                }
                out
            }
        }
    }
}

/// `v ← v + Xᵀu` without allocating (dense fast path used by hot loops).
pub fn tr_matvec_acc<T: Scalar>(x: &DesignMatrix<T>, u: &[T], v: &mut [T]) {
    match x {
        DesignMatrix::Dense(a) => {
            for (i, &ui) in u.iter().enumerate() {
                axpy(ui, a.row(i), v);
            }
        }
        DesignMatrix::Sparse(a) => {
            for j in 0..a.cols {
                let mut s = T::zero();
                for (i, x) in a.col_entries(j) {
                    s += x * u[i];
                }
                v[j] += s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::nrm2;
    use crate::rng::SplitMix64;

    fn random_dense(m: usize, n: usize, seed: u64) -> Mat<f64> {
        let mut rng = SplitMix64::new(seed);
        Mat::from_vec_unchecked(m, n, (0..m * n).map(|_| rng.next_gaussian()).collect())
    }

    fn sparsify(a: &Mat<f64>) -> SparseMat<f64> {
        let rows = (0..a.rows())
            .map(|i| {
                a.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v.abs() > 0.8)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        SparseMat::from_rows(a.cols(), rows).unwrap()
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = random_dense(13, 9, 5);
        let sparse = DesignMatrix::Sparse(sparsify(&a));
        let dense = DesignMatrix::Dense(sparse.to_dense());
        let v: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
        let u: Vec<f64> = (0..13).map(|i| 0.5 * i as f64 - 3.0).collect();
        assert!(nrm2(&crate::linalg::sub(&dense.matvec(&v), &sparse.matvec(&v))) < 1e-14);
        assert!(nrm2(&crate::linalg::sub(&dense.tr_matvec(&u), &sparse.tr_matvec(&u))) < 1e-14);
    }

    #[test]
    fn gram_matrices_match_explicit() {
        let a = random_dense(6, 4, 11);
        let x = DesignMatrix::Dense(a.clone());
        let gn = x.gram_n();
        let gm = x.gram_m();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for r in 0..6 {
                    s += a.get(r, i) * a.get(r, j);
                }
                assert!((gn.get(i, j) - s).abs() < 1e-12);
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                let s = if i == j { 1.0 } else { 0.0 } + dot(a.row(i), a.row(j));
                assert!((gm.get(i, j) - s).abs() < 1e-12, "at {i},{j}");
            }
        }
    }

    #[test]
    fn gather_cols_matches_columns() {
        let a = random_dense(7, 5, 3);
        let x = DesignMatrix::Dense(a.clone());
        let blk = x.gather_cols(&[1, 4]);
        for i in 0..7 {
            assert_eq!(blk.col(0)[i], a.get(i, 1));
            assert_eq!(blk.col(1)[i], a.get(i, 4));
        }
    }

    #[test]
    fn duplicate_or_unsorted_columns_rejected() {
        assert!(SparseMat::from_rows(3, vec![vec![(1, 1.0), (1, 2.0)]]).is_err());
        assert!(SparseMat::from_rows(3, vec![vec![(2, 1.0), (0, 2.0)]]).is_err());
    }
}
