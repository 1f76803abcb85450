//! Reverse Cuthill-McKee ordering and an envelope (skyline) LU for
//! structurally symmetric sparse matrices.

use alloc::vec::Vec;

use super::CsrMatrix;
use crate::{Error, Result};

/// Reverse Cuthill-McKee permutation of the symmetrized graph of `a`:
/// `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if j != i && j < n {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (deg[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral(&adj, &deg, seed);
        let first = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = first;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (deg[w], w));
            for w in next {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral node of the component of `seed` by repeated BFS.
fn peripheral(adj: &[Vec<usize>], deg: &[usize], seed: usize) -> usize {
    let mut best = seed;
    let mut ecc = 0;
    let mut level = alloc::vec![usize::MAX; adj.len()];
    let mut touched = Vec::new();
    for _ in 0..8 {
        for &t in &touched {
            level[t] = usize::MAX;
        }
        touched.clear();
        level[best] = 0;
        touched.push(best);
        let mut head = 0;
        while head < touched.len() {
            let v = touched[head];
            head += 1;
            for &w in &adj[v] {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    touched.push(w);
                }
            }
        }
        let depth = touched.iter().map(|&v| level[v]).max().unwrap_or(0);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        best = *touched
            .iter()
            .filter(|&&v| level[v] == depth)
            .min_by_key(|&&v| (deg[v], v))
            .expect("last level is non-empty");
    }
    for &t in &touched {
        level[t] = usize::MAX;
    }
    best
}

/// LU factors stored by envelope: row `i` of `L` and column `i` of `U` both
/// span indices `start[i]..i` in the permuted ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeLu {
    perm: Vec<usize>,
    start: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLu {
    /// Factor `a` without pivoting after RCM reordering. Fails with
    /// `ZeroPivot` on a vanishing pivot and `TooLarge` when the envelope
    /// would exceed `max_entries`.
    pub fn new(a: &CsrMatrix, max_entries: usize) -> Result<Self> {
        let n = a.nrows();
        let perm = rcm_ordering(a);
        let mut inv = alloc::vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut start: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let pi = inv[i];
            for &j in a.row(i).0 {
                let pj = inv[j];
                let (lo, hi) = if pi < pj { (pi, pj) } else { (pj, pi) };
                start[hi] = start[hi].min(lo);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - start[i]));
        }
        let size = offset[n];
        if size > max_entries {
            return Err(Error::TooLarge { n: size, cap: max_entries });
        }
        let mut lower = alloc::vec![0.0; size];
        let mut upper = alloc::vec![0.0; size];
        let mut diag = alloc::vec![0.0; n];
        for i in 0..n {
            let pi = inv[i];
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let pj = inv[j];
                if pi == pj {
                    diag[pi] += v;
                } else if pj < pi {
                    lower[offset[pi] + pj - start[pi]] += v;
                } else {
                    upper[offset[pj] + pi - start[pj]] += v;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let si = start[i];
            for j in si..i {
                let sj = start[j];
                let k0 = si.max(sj);
                // U[j][i] -= Σ L[j][k] U[k][i]
                let lj = &lower[offset[j] + k0 - sj..offset[j] + j - sj];
                let ui = &upper[offset[i] + k0 - si..offset[i] + j - si];
                let s: f64 = lj.iter().zip(ui).map(|(a, b)| a * b).sum();
                upper[offset[i] + j - si] -= s;
                // L[i][j] = (A[i][j] - Σ L[i][k] U[k][j]) / U[j][j]
                let li = &lower[offset[i] + k0 - si..offset[i] + j - si];
                let uj = &upper[offset[j] + k0 - sj..offset[j] + j - sj];
                let s: f64 = li.iter().zip(uj).map(|(a, b)| a * b).sum();
                let idx = offset[i] + j - si;
                lower[idx] = (lower[idx] - s) / diag[j];
            }
            let li = &lower[offset[i]..offset[i + 1]];
            let ui = &upper[offset[i]..offset[i + 1]];
            let s: f64 = li.iter().zip(ui).map(|(a, b)| a * b).sum();
            diag[i] -= s;
            if !(diag[i].abs() > 1e-14 * scale) {
                return Err(Error::ZeroPivot { row: perm[i] });
            }
        }
        Ok(EnvelopeLu { perm, start, offset, lower, upper, diag })
    }

    /// Number of stored off-diagonal entries in each factor.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.diag.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let si = self.start[i];
            let li = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s: f64 = li.iter().zip(&y[si..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let xi = y[i] / self.diag[i];
            y[i] = xi;
            let si = self.start[i];
            let ui = &self.upper[self.offset[i]..self.offset[i + 1]];
            for (yk, u) in y[si..i].iter_mut().zip(ui) {
                *yk -= u * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

impl super::Preconditioner for EnvelopeLu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z);
    }
}
