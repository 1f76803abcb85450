use alloc::vec::Vec;

use super::{Mesh, Topology};

/// Barycentric coordinates of `p` in cell `c`.
pub fn barycentric(mesh: &Mesh, c: usize, p: [f64; 3]) -> [f64; 4] {
    let cell = mesh.cell(c);
    let x0 = mesh.vertex(cell[0]);
    if mesh.dim() == 2 {
        let x1 = mesh.vertex(cell[1]);
        let x2 = mesh.vertex(cell[2]);
        let (a, b, cc, d) = (x1[0] - x0[0], x2[0] - x0[0], x1[1] - x0[1], x2[1] - x0[1]);
        let det = a * d - b * cc;
        let rx = p[0] - x0[0];
        let ry = p[1] - x0[1];
        let l1 = (d * rx - b * ry) / det;
        let l2 = (-cc * rx + a * ry) / det;
        return [1.0 - l1 - l2, l1, l2, 0.0];
    }
    let x1 = mesh.vertex(cell[1]);
    let x2 = mesh.vertex(cell[2]);
    let x3 = mesh.vertex(cell[3]);
    let m = [
        [x1[0] - x0[0], x2[0] - x0[0], x3[0] - x0[0]],
        [x1[1] - x0[1], x2[1] - x0[1], x3[1] - x0[1]],
        [x1[2] - x0[2], x2[2] - x0[2], x3[2] - x0[2]],
    ];
    let r = [p[0] - x0[0], p[1] - x0[1], p[2] - x0[2]];
    let l = solve3(m, r);
    [1.0 - l[0] - l[1] - l[2], l[0], l[1], l[2]]
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> [f64; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        let dk = mk[0][0] * (mk[1][1] * mk[2][2] - mk[1][2] * mk[2][1])
            - mk[0][1] * (mk[1][0] * mk[2][2] - mk[1][2] * mk[2][0])
            + mk[0][2] * (mk[1][0] * mk[2][1] - mk[1][1] * mk[2][0]);
        out[k] = dk / det;
    }
    out
}

const INSIDE_TOL: f64 = 1e-10;

/// Bucket grid over cell bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: [f64; 3],
    inv: [f64; 3],
    n: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let (lo, hi) = mesh.bounds();
        let nc = mesh.n_cells().max(1);
        let per_axis = if dim == 2 {
            crate::math::sqrt(nc as f64)
        } else {
            libm::cbrt(nc as f64)
        };
        let mut n = [1usize; 3];
        let mut inv = [0.0; 3];
        for k in 0..dim {
            n[k] = (per_axis as usize).max(1);
            let span = (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
            inv[k] = n[k] as f64 / span;
        }
        let total = n[0] * n[1] * n[2];
        let mut ranges = Vec::with_capacity(mesh.n_cells());
        let mut counts = alloc::vec![0usize; total + 1];
        let loc = Self { lo, inv, n, start: Vec::new(), items: Vec::new() };
        for c in 0..mesh.n_cells() {
            let mut clo = [f64::INFINITY; 3];
            let mut chi = [f64::NEG_INFINITY; 3];
            for &v in mesh.cell(c) {
                let p = mesh.vertex(v);
                for k in 0..3 {
                    clo[k] = clo[k].min(p[k]);
                    chi[k] = chi[k].max(p[k]);
                }
            }
            let a = loc.bucket(clo);
            let b = loc.bucket(chi);
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for l in a[2]..=b[2] {
                        counts[loc.flat([i, j, l]) + 1] += 1;
                    }
                }
            }
            ranges.push((a, b));
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = alloc::vec![0usize; counts[total]];
        for (c, (a, b)) in ranges.into_iter().enumerate() {
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for l in a[2]..=b[2] {
                        let f = loc.flat([i, j, l]);
                        items[fill[f]] = c;
                        fill[f] += 1;
                    }
                }
            }
        }
        Self { start: counts, items, ..loc }
    }

    fn bucket(&self, p: [f64; 3]) -> [usize; 3] {
        let mut b = [0usize; 3];
        for k in 0..3 {
            let t = (p[k] - self.lo[k]) * self.inv[k];
            b[k] = if t <= 0.0 { 0 } else { (t as usize).min(self.n[k] - 1) };
        }
        b
    }

    fn flat(&self, b: [usize; 3]) -> usize {
        (b[2] * self.n[1] + b[1]) * self.n[0] + b[0]
    }

    /// Cell containing `p`, preferring the lowest cell index on shared faces.
    pub fn find(&self, mesh: &Mesh, p: [f64; 3]) -> Option<usize> {
        let f = self.flat(self.bucket(p));
        let nv = mesh.dim() + 1;
        self.items[self.start[f]..self.start[f + 1]]
            .iter()
            .copied()
            .find(|&c| barycentric(mesh, c, p)[..nv].iter().all(|&l| l >= -INSIDE_TOL))
    }
}

/// Locate `p` by walking across faces from `start`, stepping through the face
/// with the most negative barycentric coordinate. Returns `None` when the walk
/// leaves the mesh or exceeds its step budget.
pub fn walk(mesh: &Mesh, topo: &Topology, start: usize, p: [f64; 3]) -> Option<usize> {
    let nv = mesh.dim() + 1;
    let mut c = start;
    for _ in 0..(4 * mesh.n_cells() + 16) {
        let l = barycentric(mesh, c, p);
        let (k, lmin) = (0..nv)
            .map(|k| (k, l[k]))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if lmin >= -INSIDE_TOL {
            return Some(c);
        }
        c = topo.neighbor(c, k)?;
    }
    None
}
