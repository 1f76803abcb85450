use alloc::vec::Vec;

use crate::{Error, Result};

/// Default size limit for dense factorizations.
pub const DENSE_CAP: usize = 2000;

/// LU factorization with partial pivoting of a row-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(n: usize, a: &[f64]) -> Result<Self> {
        Self::with_cap(n, a, DENSE_CAP)
    }

    pub fn with_cap(n: usize, a: &[f64], cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::TooLarge { n, cap });
        }
        if a.len() != n * n {
            return Err(Error::DimensionMismatch(alloc::format!("{} entries for n = {n}", a.len())));
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::NotFinite("dense matrix"));
        }
        for k in 0..n {
            let (mut p, mut best) = (k, 0.0);
            for i in k..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale || scale == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solve `A x = b` for a small dense row-major matrix.
pub fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseLu::new(n, a)?.solve(b))
}

impl super::Preconditioner for DenseLu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.solve(r));
    }
}
