use alloc::vec::Vec;

use crate::mesh::local_edges;

/// Number of nodal basis functions of a scalar Lagrange element.
pub fn n_local(dim: usize, degree: usize) -> usize {
    match (dim, degree) {
        (2, 1) => 3,
        (2, 2) => 6,
        (3, 1) => 4,
        _ => 10,
    }
}

fn barycentrics(dim: usize, xi: [f64; 3]) -> ([f64; 4], [[f64; 3]; 4]) {
    if dim == 2 {
        (
            [1.0 - xi[0] - xi[1], xi[0], xi[1], 0.0],
            [[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]],
        )
    } else {
        (
            [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]],
            [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
    }
}

/// Values and reference gradients of the nodal basis at `xi`.
///
/// Degree-2 functions are ordered vertices first, then edge midpoints in
/// [`local_edges`] order.
pub fn reference_basis_eval(dim: usize, degree: usize, xi: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let n = n_local(dim, degree);
    let mut values = alloc::vec![0.0; n];
    let mut grads = alloc::vec![[0.0; 3]; n];
    eval_into(dim, degree, xi, &mut values, &mut grads);
    (values, grads)
}

pub(crate) fn eval_into(dim: usize, degree: usize, xi: [f64; 3], values: &mut [f64], grads: &mut [[f64; 3]]) {
    let (l, dl) = barycentrics(dim, xi);
    let nv = dim + 1;
    if degree == 1 {
        values[..nv].copy_from_slice(&l[..nv]);
        grads[..nv].copy_from_slice(&dl[..nv]);
        return;
    }
    for i in 0..nv {
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        for k in 0..3 {
            grads[i][k] = (4.0 * l[i] - 1.0) * dl[i][k];
        }
    }
    for (e, &[a, b]) in local_edges(dim).iter().enumerate() {
        values[nv + e] = 4.0 * l[a] * l[b];
        for k in 0..3 {
            grads[nv + e][k] = 4.0 * (l[a] * dl[b][k] + l[b] * dl[a][k]);
        }
    }
}

/// Reference coordinates of the nodes, in basis order.
pub fn reference_nodes(dim: usize, degree: usize) -> Vec<[f64; 3]> {
    let mut verts = alloc::vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    if dim == 3 {
        verts.push([0.0, 0.0, 1.0]);
    }
    if degree == 2 {
        for &[a, b] in local_edges(dim) {
            let (pa, pb) = (verts[a], verts[b]);
            verts.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
        }
    }
    verts
}

/// Precomputed basis values and reference gradients at quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn new(dim: usize, degree: usize, points: &[[f64; 3]]) -> Self {
        let n = n_local(dim, degree);
        let mut values = alloc::vec![0.0; n * points.len()];
        let mut grads = alloc::vec![[0.0; 3]; n * points.len()];
        for (q, &p) in points.iter().enumerate() {
            eval_into(dim, degree, p, &mut values[q * n..(q + 1) * n], &mut grads[q * n..(q + 1) * n]);
        }
        Tabulation { n, values, grads }
    }

    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n..(q + 1) * self.n]
    }

    pub fn grads(&self, q: usize) -> &[[f64; 3]] {
        &self.grads[q * self.n..(q + 1) * self.n]
    }
}
