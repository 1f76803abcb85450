use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the union of the given column sets as pattern.
    pub fn from_row_sets(nrows: usize, ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values: alloc::vec![0.0; nnz] }
    }

    /// Build from raw arrays, checking the structural invariants.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: &str| Err(Error::DimensionMismatch(alloc::string::String::from(m)));
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || *row_ptr.last().unwrap_or(&0) != col_idx.len() {
            return bad("row pointer does not match column array");
        }
        if col_idx.len() != values.len() {
            return bad("column and value arrays differ in length");
        }
        for r in 0..nrows {
            if row_ptr[r] > row_ptr[r + 1] {
                return bad("row pointer not monotone");
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return bad("column indices not strictly increasing or out of range");
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Sum duplicate triplets into a matrix.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = alloc::vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: alloc::vec![1.0; n],
        }
    }

    pub fn from_dense(nrows: usize, ncols: usize, a: &[f64]) -> Self {
        let mut t = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                if a[i * ncols + j] != 0.0 {
                    t.push((i, j, a[i * ncols + j]));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        crate::par::fill_indexed(y, |i| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            s
        });
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((self.col_idx[k], i, self.values[k]));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// `a * self + b * other` on the union pattern.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}x{} vs {}x{}",
                self.nrows,
                self.ncols,
                other.nrows,
                other.ncols
            )));
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, a * x)));
            let (c, v) = other.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, b * x)));
        }
        Ok(Self::from_triplets(self.nrows, self.ncols, &t))
    }

    /// Copy of the block `rows × cols`, re-indexed from zero.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            let (c, v) = self.row(i);
            let lo = c.partition_point(|&j| j < cols.start);
            let hi = c.partition_point(|&j| j < cols.end);
            col_idx.extend(c[lo..hi].iter().map(|&j| j - cols.start));
            values.extend_from_slice(&v[lo..hi]);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values }
    }

    /// Principal submatrix on a sorted index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in idx {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if let Ok(p) = idx.binary_search(&j) {
                    col_idx.push(p);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: idx.len(), ncols: idx.len(), row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = alloc::vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                a[i * self.ncols + j] = x;
            }
        }
        a
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                m = m.max((x - self.get(j, i)).abs());
            }
        }
        m
    }

    /// Replace the listed rows by identity rows. With `zero_columns` the
    /// matching columns are cleared as well (symmetric elimination).
    pub fn constrain_rows(&mut self, constrained: &[bool], zero_columns: bool) {
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if constrained[i] {
                    self.values[k] = if i == j { 1.0 } else { 0.0 };
                } else if zero_columns && j < constrained.len() && constrained[j] {
                    self.values[k] = 0.0;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.matvec(&[1.0, 1.0]), alloc::vec![5.0, 2.0]);
        assert_eq!(a.transpose().get(0, 1), 2.0);
    }

    #[test]
    fn raw_arrays_are_checked() {
        assert!(CsrMatrix::from_raw(1, 2, alloc::vec![0, 2], alloc::vec![1, 0], alloc::vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_raw(1, 2, alloc::vec![0, 2], alloc::vec![0, 1], alloc::vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn blocks_and_principal() {
        let a = CsrMatrix::from_dense(3, 3, &[1.0, 2.0, 0.0, 3.0, 4.0, 5.0, 0.0, 6.0, 7.0]);
        let b = a.submatrix(1..3, 0..2);
        assert_eq!(b.to_dense(), alloc::vec![3.0, 4.0, 0.0, 6.0]);
        let p = a.principal(&[0, 2]);
        assert_eq!(p.to_dense(), alloc::vec![1.0, 0.0, 0.0, 7.0]);
    }
}
