use crate::mesh::Mesh;

/// Affine map of a simplex from the reference element.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    pub dim: usize,
    pub origin: [f64; 3],
    /// Columns are the edge vectors `x_k - x_0`.
    pub jac: [[f64; 3]; 3],
    /// Inverse transpose, maps reference gradients to physical ones.
    pub inv_t: [[f64; 3]; 3],
    pub det: f64,
}

impl CellMap {
    pub fn new(mesh: &Mesh, c: usize) -> Self {
        let dim = mesh.dim();
        let cell = mesh.cell(c);
        let x0 = mesh.vertex(cell[0]);
        let mut jac = [[0.0; 3]; 3];
        for k in 0..dim {
            let xk = mesh.vertex(cell[k + 1]);
            for i in 0..3 {
                jac[i][k] = xk[i] - x0[i];
            }
        }
        let mut inv_t = [[0.0; 3]; 3];
        let det;
        if dim == 2 {
            det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            // inv = [[d, -b], [-c, a]] / det; store its transpose.
            inv_t[0][0] = jac[1][1] / det;
            inv_t[0][1] = -jac[1][0] / det;
            inv_t[1][0] = -jac[0][1] / det;
            inv_t[1][1] = jac[0][0] / det;
        } else {
            let m = jac;
            let cof = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
            };
            det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
            for i in 0..3 {
                for j in 0..3 {
                    inv_t[i][j] = cof(i, j) / det;
                }
            }
        }
        CellMap { dim, origin: x0, jac, inv_t, det }
    }

    /// Physical point of reference coordinates `xi`.
    pub fn map(&self, xi: [f64; 3]) -> [f64; 3] {
        let mut x = self.origin;
        for i in 0..3 {
            for k in 0..self.dim {
                x[i] += self.jac[i][k] * xi[k];
            }
        }
        x
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            for k in 0..self.dim {
                out[i] += self.inv_t[i][k] * g[k];
            }
        }
        out
    }

    /// Measure scaling of the reference rule (positive for valid cells).
    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }
}
