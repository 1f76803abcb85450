//! Element-loop assembly of the bilinear and linear forms.
//!
//! Element blocks are computed independently (in parallel with the
//! `parallel` feature) and scattered into CSR storage in cell order, so the
//! assembled values do not depend on the thread count.

use alloc::vec::Vec;

use crate::femspace::{edge_rule, quadrature_rule, CellMap, FunctionSpace, Rank, Tabulation};
use crate::linsolve::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh, RegionTag};
use crate::{Error, Result};

/// Piecewise-constant coefficient over regions.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Uniform(f64),
    PerRegion(Vec<(RegionTag, f64)>),
}

impl Coefficient {
    pub fn value(&self, region: RegionTag) -> Result<f64> {
        match self {
            Coefficient::Uniform(v) => Ok(*v),
            Coefficient::PerRegion(list) => list
                .iter()
                .find(|(r, _)| *r == region)
                .map(|&(_, v)| v)
                .ok_or(Error::MissingCoefficient(region)),
        }
    }

    fn check_positive(&self, mesh: &Mesh, space: &FunctionSpace) -> Result<()> {
        for &c in space.cells() {
            let r = mesh.region(c);
            let v = self.value(r)?;
            if !(v > 0.0) {
                return Err(Error::NonPositiveCoefficient { region: r, value: v });
            }
        }
        Ok(())
    }

    fn check_defined(&self, mesh: &Mesh, space: &FunctionSpace) -> Result<()> {
        for &c in space.cells() {
            self.value(mesh.region(c))?;
        }
        Ok(())
    }
}

/// Dense element blocks with their global row and column dofs.
#[derive(Debug, Clone, Default)]
pub struct ElementMatrixBatch {
    pub rows: Vec<Vec<usize>>,
    pub cols: Vec<Vec<usize>>,
    /// Row-major blocks of shape `rows[e].len() × cols[e].len()`.
    pub blocks: Vec<Vec<f64>>,
}

impl ElementMatrixBatch {
    pub fn push(&mut self, rows: Vec<usize>, cols: Vec<usize>, block: Vec<f64>) {
        debug_assert_eq!(rows.len() * cols.len(), block.len());
        self.rows.push(rows);
        self.cols.push(cols);
        self.blocks.push(block);
    }

    /// Sum all blocks into a CSR matrix, in batch order.
    pub fn to_csr(&self, nrows: usize, ncols: usize) -> CsrMatrix {
        let mut sets: Vec<Vec<usize>> = alloc::vec![Vec::new(); nrows];
        for (rows, cols) in self.rows.iter().zip(&self.cols) {
            for &r in rows {
                sets[r].extend_from_slice(cols);
            }
        }
        let mut m = CsrMatrix::from_row_sets(nrows, ncols, sets);
        for ((rows, cols), block) in self.rows.iter().zip(&self.cols).zip(&self.blocks) {
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    let v = block[i * cols.len() + j];
                    if v != 0.0 {
                        let k = m.find(r, c).expect("pattern entry");
                        m.values_mut()[k] += v;
                    }
                }
            }
        }
        m
    }
}

fn collect<F>(cells: &[usize], f: F) -> ElementMatrixBatch
where
    F: Fn(usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) + Sync + Send,
{
    let parts = crate::par::map_indexed(cells.len(), |i| f(cells[i]));
    let mut batch = ElementMatrixBatch::default();
    for (r, c, b) in parts {
        batch.push(r, c, b);
    }
    batch
}

/// Global dofs of a cell for every component, component-major.
pub fn cell_dofs(space: &FunctionSpace, c: usize) -> Vec<usize> {
    let nodes = space.cell_nodes(c).expect("supported cell");
    let mut out = Vec::with_capacity(nodes.len() * space.n_components());
    for k in 0..space.n_components() {
        out.extend(nodes.iter().map(|&n| space.dof(n, k)));
    }
    out
}

fn quad_degree(p: usize, extra: usize) -> usize {
    (2 * p + extra).min(6)
}

/// Scalar block `∫ c φ_i φ_j` replicated on each component.
pub fn assemble_mass(mesh: &Mesh, space: &FunctionSpace, coef: &Coefficient) -> Result<CsrMatrix> {
    coef.check_defined(mesh, space)?;
    let q = quadrature_rule(mesh.dim(), quad_degree(space.degree(), 0))?;
    let tab = Tabulation::new(mesh.dim(), space.degree(), &q.points);
    let nl = space.n_local();
    let nc = space.n_components();
    let batch = collect(space.cells(), |c| {
        let map = CellMap::new(mesh, c);
        let cv = coef.value(mesh.region(c)).unwrap_or(0.0);
        let mut local = alloc::vec![0.0; nl * nl];
        for (qi, &w) in q.weights.iter().enumerate() {
            let phi = tab.values(qi);
            let wq = w * map.abs_det() * cv;
            for i in 0..nl {
                for j in 0..nl {
                    local[i * nl + j] += wq * phi[i] * phi[j];
                }
            }
        }
        let dofs = cell_dofs(space, c);
        (dofs.clone(), dofs, expand_components(&local, nl, nc))
    });
    Ok(batch.to_csr(space.n_dofs(), space.n_dofs()))
}

/// Block-diagonal replication of a scalar element block.
fn expand_components(local: &[f64], nl: usize, nc: usize) -> Vec<f64> {
    if nc == 1 {
        return local.to_vec();
    }
    let n = nl * nc;
    let mut out = alloc::vec![0.0; n * n];
    for k in 0..nc {
        for i in 0..nl {
            for j in 0..nl {
                out[(k * nl + i) * n + k * nl + j] = local[i * nl + j];
            }
        }
    }
    out
}

/// `∫ k ∇φ_i · ∇φ_j`, component-wise for vector spaces.
pub fn assemble_diffusion(mesh: &Mesh, space: &FunctionSpace, k: &Coefficient) -> Result<CsrMatrix> {
    k.check_positive(mesh, space)?;
    let deg = 2 * space.degree().saturating_sub(1);
    let q = quadrature_rule(mesh.dim(), deg.max(1))?;
    let tab = Tabulation::new(mesh.dim(), space.degree(), &q.points);
    let nl = space.n_local();
    let nc = space.n_components();
    let batch = collect(space.cells(), |c| {
        let map = CellMap::new(mesh, c);
        let kv = k.value(mesh.region(c)).unwrap_or(0.0);
        let mut local = alloc::vec![0.0; nl * nl];
        for (qi, &w) in q.weights.iter().enumerate() {
            let g: Vec<[f64; 3]> = tab.grads(qi).iter().map(|&g| map.grad(g)).collect();
            let wq = w * map.abs_det() * kv;
            for i in 0..nl {
                for j in i..nl {
                    let v = wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                    local[i * nl + j] += v;
                }
            }
        }
        for i in 0..nl {
            for j in 0..i {
                local[i * nl + j] = local[j * nl + i];
            }
        }
        let dofs = cell_dofs(space, c);
        (dofs.clone(), dofs, expand_components(&local, nl, nc))
    });
    Ok(batch.to_csr(space.n_dofs(), space.n_dofs()))
}

/// Velocity value at reference point `xi` of a cell of the velocity space
/// (zero outside its support).
fn velocity_at(space_u: &FunctionSpace, u: &[f64], c: usize, phi: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    if let Some(nodes) = space_u.cell_nodes(c) {
        for k in 0..space_u.n_components() {
            out[k] = nodes.iter().zip(phi).map(|(&n, p)| u[space_u.dof(n, k)] * p).sum();
        }
    }
    out
}

/// `∫ ρc_p (u · ∇φ_j) φ_i` for a scalar space and a discrete velocity.
pub fn assemble_convection(
    mesh: &Mesh,
    space: &FunctionSpace,
    space_u: &FunctionSpace,
    u: &[f64],
    rho_cp: &Coefficient,
) -> Result<CsrMatrix> {
    if u.len() != space_u.n_dofs() || space_u.rank() != Rank::Vector || space.rank() != Rank::Scalar {
        return Err(Error::DimensionMismatch(alloc::format!(
            "velocity vector of length {} for a space with {} dofs",
            u.len(),
            space_u.n_dofs()
        )));
    }
    rho_cp.check_defined(mesh, space)?;
    let deg = (space.degree() + space_u.degree() + space.degree().saturating_sub(1)).min(6);
    let q = quadrature_rule(mesh.dim(), deg.max(1))?;
    let tab = Tabulation::new(mesh.dim(), space.degree(), &q.points);
    let tab_u = Tabulation::new(mesh.dim(), space_u.degree(), &q.points);
    let nl = space.n_local();
    let batch = collect(space.cells(), |c| {
        let dofs = cell_dofs(space, c);
        let mut local = alloc::vec![0.0; nl * nl];
        if space_u.supports_cell(c) {
            let map = CellMap::new(mesh, c);
            let rc = rho_cp.value(mesh.region(c)).unwrap_or(0.0);
            for (qi, &w) in q.weights.iter().enumerate() {
                let uq = velocity_at(space_u, u, c, tab_u.values(qi));
                let phi = tab.values(qi);
                let wq = w * map.abs_det() * rc;
                for j in 0..nl {
                    let g = map.grad(tab.grads(qi)[j]);
                    let adv = uq[0] * g[0] + uq[1] * g[1] + uq[2] * g[2];
                    for i in 0..nl {
                        local[i * nl + j] += wq * adv * phi[i];
                    }
                }
            }
        }
        (dofs.clone(), dofs, local)
    });
    Ok(batch.to_csr(space.n_dofs(), space.n_dofs()))
}

/// Vector Laplacian `A = ∫ μ ∇φ_i : ∇φ_j` and divergence `B = ∫ ψ_k ∇·φ_j`
/// of a Taylor-Hood pair.
pub fn assemble_stokes_blocks(
    mesh: &Mesh,
    space_u: &FunctionSpace,
    space_p: &FunctionSpace,
    mu: f64,
) -> Result<(CsrMatrix, CsrMatrix)> {
    if space_u.degree() != space_p.degree() + 1 {
        return Err(Error::UnstablePair { velocity: space_u.degree(), pressure: space_p.degree() });
    }
    if space_u.rank() != Rank::Vector || space_p.rank() != Rank::Scalar {
        return Err(Error::DimensionMismatch(alloc::string::String::from(
            "velocity must be a vector space and pressure a scalar space",
        )));
    }
    let a = assemble_diffusion(mesh, space_u, &Coefficient::Uniform(mu))?;
    let q = quadrature_rule(mesh.dim(), space_u.degree() - 1 + space_p.degree())?;
    let tab_u = Tabulation::new(mesh.dim(), space_u.degree(), &q.points);
    let tab_p = Tabulation::new(mesh.dim(), space_p.degree(), &q.points);
    let (nu, np, d) = (space_u.n_local(), space_p.n_local(), mesh.dim());
    let batch = collect(space_u.cells(), |c| {
        let map = CellMap::new(mesh, c);
        let mut local = alloc::vec![0.0; np * nu * d];
        for (qi, &w) in q.weights.iter().enumerate() {
            let psi = tab_p.values(qi);
            let wq = w * map.abs_det();
            for j in 0..nu {
                let g = map.grad(tab_u.grads(qi)[j]);
                for k in 0..d {
                    for i in 0..np {
                        local[i * nu * d + k * nu + j] += wq * psi[i] * g[k];
                    }
                }
            }
        }
        (cell_dofs(space_p, c), cell_dofs(space_u, c), local)
    });
    Ok((a, batch.to_csr(space_p.n_dofs(), space_u.n_dofs())))
}

/// Buoyancy coupling `C` with `(C T)_i = -∫ ρβ T g·φ_i` and the constant
/// load `∫ ρβ T_ref g·φ_i`, so that `C T + offset` is the momentum load of
/// `-ρβ(T - T_ref) g`.
pub fn assemble_buoyancy(
    mesh: &Mesh,
    space_u: &FunctionSpace,
    space_t: &FunctionSpace,
    rho: f64,
    beta: f64,
    t_ref: f64,
    gravity: &[f64],
) -> Result<(CsrMatrix, Vec<f64>)> {
    let d = mesh.dim();
    if gravity.len() != d {
        return Err(Error::DimensionMismatch(alloc::format!(
            "gravity has {} components on a {d}D mesh",
            gravity.len()
        )));
    }
    let q = quadrature_rule(d, space_u.degree() + space_t.degree())?;
    let tab_u = Tabulation::new(d, space_u.degree(), &q.points);
    let tab_t = Tabulation::new(d, space_t.degree(), &q.points);
    let (nu, nt) = (space_u.n_local(), space_t.n_local());
    let parts = crate::par::map_indexed(space_u.cells().len(), |e| {
        let c = space_u.cells()[e];
        let map = CellMap::new(mesh, c);
        let mut local = alloc::vec![0.0; nu * d * nt];
        let mut load = alloc::vec![0.0; nu * d];
        for (qi, &w) in q.weights.iter().enumerate() {
            let phi = tab_u.values(qi);
            let s = tab_t.values(qi);
            let wq = w * map.abs_det() * rho * beta;
            for k in 0..d {
                for i in 0..nu {
                    let base = wq * gravity[k] * phi[i];
                    load[k * nu + i] += base * t_ref;
                    for j in 0..nt {
                        local[(k * nu + i) * nt + j] -= base * s[j];
                    }
                }
            }
        }
        (cell_dofs(space_u, c), cell_dofs(space_t, c), local, load)
    });
    let mut batch = ElementMatrixBatch::default();
    let mut offset = alloc::vec![0.0; space_u.n_dofs()];
    for (rows, cols, local, load) in parts {
        for (i, &r) in rows.iter().enumerate() {
            offset[r] += load[i];
        }
        batch.push(rows, cols, local);
    }
    Ok((batch.to_csr(space_u.n_dofs(), space_t.n_dofs()), offset))
}

/// Load vector `∫ f·φ_i` of a (vector-valued) source.
pub fn assemble_load(mesh: &Mesh, space: &FunctionSpace, f: &(dyn Fn([f64; 3]) -> [f64; 3] + Sync)) -> Result<Vec<f64>> {
    let q = quadrature_rule(mesh.dim(), 6)?;
    let tab = Tabulation::new(mesh.dim(), space.degree(), &q.points);
    let nl = space.n_local();
    let nc = space.n_components();
    let parts = crate::par::map_indexed(space.cells().len(), |e| {
        let c = space.cells()[e];
        let map = CellMap::new(mesh, c);
        let mut local = alloc::vec![0.0; nl * nc];
        for (qi, &w) in q.weights.iter().enumerate() {
            let fx = f(map.map(q.points[qi]));
            let phi = tab.values(qi);
            for k in 0..nc {
                for i in 0..nl {
                    local[k * nl + i] += w * map.abs_det() * fx[k] * phi[i];
                }
            }
        }
        (cell_dofs(space, c), local)
    });
    let mut out = alloc::vec![0.0; space.n_dofs()];
    for (dofs, local) in parts {
        for (i, &r) in dofs.iter().enumerate() {
            out[r] += local[i];
        }
    }
    Ok(out)
}

/// Nodes of a tagged facet paired with the 1D basis ordering used for
/// boundary integrals: the two vertices, then the midpoint for P2.
pub(crate) fn facet_local_nodes(space: &FunctionSpace, facet: &[usize]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(3);
    for &v in facet {
        out.push(space.vertex_node(v)?);
    }
    if space.degree() == 2 {
        out.push(space.edge_node(facet[0], facet[1])?);
    }
    Some(out)
}

/// 1D Lagrange basis on a facet parametrized by `t ∈ [0, 1]`.
pub(crate) fn edge_basis(degree: usize, t: f64) -> [f64; 3] {
    if degree == 1 {
        [1.0 - t, t, 0.0]
    } else {
        [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)]
    }
}

/// Robin term on the facets tagged `tag`: adds `h ∫ φ_i φ_j` to the matrix
/// and `∫ (h T_ext - q) φ_i` to the load, with `q` the outward flux offset.
pub fn apply_robin(
    mesh: &Mesh,
    space: &FunctionSpace,
    tag: BoundaryTag,
    h: f64,
    t_ext: f64,
    flux_offset: &(dyn Fn([f64; 3]) -> f64 + Sync),
) -> Result<(CsrMatrix, Vec<f64>)> {
    if mesh.dim() != 2 {
        return Err(Error::Unsupported(alloc::string::String::from("boundary integrals on 3D meshes")));
    }
    if !mesh.has_tag(tag) {
        return Err(Error::UnknownTag(tag));
    }
    if h < 0.0 {
        return Err(Error::InvalidParameter { name: "h", reason: alloc::format!("negative transfer coefficient {h}") });
    }
    let rule = edge_rule(6);
    let mut batch = ElementMatrixBatch::default();
    let mut load = alloc::vec![0.0; space.n_dofs()];
    for f in 0..mesh.n_facets() {
        if mesh.facet_tag(f) != tag {
            continue;
        }
        let fv = mesh.facet(f);
        let Some(nodes) = facet_local_nodes(space, fv) else { continue };
        let (pa, pb) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]));
        let len = mesh.facet_measure(f);
        let n = nodes.len();
        let mut local = alloc::vec![0.0; n * n];
        for &(t, w) in &rule {
            let b = edge_basis(space.degree(), t);
            let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), 0.0];
            let src = h * t_ext - flux_offset(x);
            for i in 0..n {
                load[nodes[i]] += w * len * src * b[i];
                for j in 0..n {
                    local[i * n + j] += w * len * h * b[i] * b[j];
                }
            }
        }
        batch.push(nodes.clone(), nodes, local);
    }
    Ok((batch.to_csr(space.n_dofs(), space.n_dofs()), load))
}

/// Dofs on facets carrying one of `tags` with values of `value` at the
/// nodes, sorted by dof. Tags with no facet simply contribute nothing.
pub fn dirichlet_dofs(
    mesh: &Mesh,
    space: &FunctionSpace,
    tags: &[BoundaryTag],
    value: &dyn Fn([f64; 3]) -> [f64; 3],
) -> Vec<(usize, f64)> {
    let nodes = space.tagged_nodes(mesh, tags);
    let mut out = Vec::with_capacity(nodes.len() * space.n_components());
    for k in 0..space.n_components() {
        for &n in &nodes {
            out.push((space.dof(n, k), value(space.node_coords()[n])[k]));
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

/// Impose `x_i = v_i`: rows become identity rows with the value in the load.
/// With `symmetric`, the constrained columns are eliminated into the load as
/// well. Returns the constrained indices.
pub fn apply_dirichlet(matrix: &mut CsrMatrix, rhs: &mut [f64], constraints: &[(usize, f64)], symmetric: bool) -> Vec<usize> {
    let n = matrix.nrows();
    let mut mask = alloc::vec![false; n];
    let mut val = alloc::vec![0.0; n];
    for &(i, v) in constraints {
        mask[i] = true;
        val[i] = v;
    }
    if symmetric {
        for i in 0..n {
            if mask[i] {
                continue;
            }
            let (cols, vals) = matrix.row(i);
            let s: f64 = cols.iter().zip(vals).filter(|(&j, _)| j < n && mask[j]).map(|(&j, &a)| a * val[j]).sum();
            rhs[i] -= s;
        }
    }
    matrix.constrain_rows(&mask, symmetric);
    for i in 0..n {
        if mask[i] {
            rhs[i] = val[i];
        }
    }
    (0..n).filter(|&i| mask[i]).collect()
}

#[cfg(test)]
mod tests;
