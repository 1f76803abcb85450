use alloc::vec::Vec;

use super::{CsrMatrix, Preconditioner};
use crate::{Error, Result};

/// Incomplete LU factorization with the sparsity of the input matrix.
///
/// `L` (unit lower) and `U` are stored together in one CSR array.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(alloc::format!("ILU(0) of a {}x{} matrix", n, a.ncols())));
        }
        let mut lu = a.clone();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            match lu.find(i, i) {
                Some(k) => diag.push(k),
                None => return Err(Error::ZeroPivot { row: i }),
            }
        }
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let mut pos = alloc::vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                pos[col_idx[k]] = k;
            }
            let vals = lu.values_mut();
            for k in start..end {
                let j = col_idx[k];
                if j >= i {
                    break;
                }
                let pivot = vals[diag[j]];
                let lij = vals[k] / pivot;
                vals[k] = lij;
                for kk in diag[j] + 1..row_ptr[j + 1] {
                    let p = pos[col_idx[kk]];
                    if p != usize::MAX {
                        vals[p] -= lij * vals[kk];
                    }
                }
            }
            let d = vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::ZeroPivot { row: i });
            }
            for k in start..end {
                pos[col_idx[k]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for k in rp[i]..self.diag[i] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..rp[i + 1] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s / v[self.diag[i]];
        }
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z);
    }
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        let mut inv_diag = Vec::with_capacity(d.len());
        for (row, x) in d.into_iter().enumerate() {
            if x == 0.0 {
                return Err(Error::ZeroPivot { row });
            }
            inv_diag.push(1.0 / x);
        }
        Ok(Jacobi { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..r.len() {
            z[i] = r[i] * self.inv_diag[i];
        }
    }
}

/// Two overlapping subdomains, each handled by ILU(0), combined additively.
///
/// Rows are split at the midpoint of the index range and each half is grown
/// by `overlap` layers of matrix-graph neighbours.
#[derive(Debug, Clone)]
pub struct TwoDomainSchwarz {
    domains: Vec<(Vec<usize>, Ilu0)>,
    n: usize,
}

impl TwoDomainSchwarz {
    pub fn new(a: &CsrMatrix, overlap: usize) -> Result<Self> {
        let n = a.nrows();
        let half = n / 2;
        let mut domains = Vec::new();
        for range in [0..half.max(1).min(n), half.max(1).min(n)..n] {
            if range.is_empty() {
                continue;
            }
            let mut member = alloc::vec![false; n];
            for i in range.clone() {
                member[i] = true;
            }
            for _ in 0..overlap {
                let current: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
                for i in current {
                    for &j in a.row(i).0 {
                        member[j] = true;
                    }
                }
            }
            let idx: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
            let sub = a.principal(&idx);
            domains.push((idx, Ilu0::new(&sub)?));
        }
        Ok(TwoDomainSchwarz { domains, n })
    }
}

impl Preconditioner for TwoDomainSchwarz {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z[..self.n].iter_mut().for_each(|x| *x = 0.0);
        for (idx, ilu) in &self.domains {
            let rl: Vec<f64> = idx.iter().map(|&i| r[i]).collect();
            let mut zl = alloc::vec![0.0; idx.len()];
            ilu.solve(&rl, &mut zl);
            for (k, &i) in idx.iter().enumerate() {
                z[i] += zl[k];
            }
        }
    }
}
