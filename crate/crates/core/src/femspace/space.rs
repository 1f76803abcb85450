use alloc::vec::Vec;

use super::basis::{n_local, reference_basis_eval};
use super::geometry::CellMap;
use crate::mesh::{BoundaryTag, Mesh, RegionTag, Topology};
use crate::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    /// Vector with one component per spatial dimension.
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Whole,
    /// Only cells tagged as aqueous humor.
    Fluid,
}

/// Continuous Lagrange space on a mesh.
///
/// Nodes are numbered vertices first (by vertex index), then edge midpoints
/// (by sorted edge). Components are blocked: the dof of component `k` at
/// node `n` is `k * n_nodes + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpace {
    dim: usize,
    rank: Rank,
    degree: usize,
    support: Support,
    n_nodes: usize,
    n_local: usize,
    cell_nodes: Vec<usize>,
    cells: Vec<usize>,
    vertex_node: Vec<usize>,
    edges: Vec<([usize; 2], usize)>,
    node_coords: Vec<[f64; 3]>,
}

impl FunctionSpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn n_components(&self) -> usize {
        match self.rank {
            Rank::Scalar => 1,
            Rank::Vector => self.dim,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.n_components()
    }

    /// Scalar basis functions per cell.
    pub fn n_local(&self) -> usize {
        self.n_local
    }

    /// Cells carrying this space, in increasing order.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn supports_cell(&self, c: usize) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    /// Node indices of a supported cell, in reference basis order.
    pub fn cell_nodes(&self, c: usize) -> Option<&[usize]> {
        let i = self.cells.binary_search(&c).ok()?;
        Some(&self.cell_nodes[i * self.n_local..(i + 1) * self.n_local])
    }

    /// Node indices of the `i`-th supported cell.
    pub fn nodes_of_slot(&self, i: usize) -> &[usize] {
        &self.cell_nodes[i * self.n_local..(i + 1) * self.n_local]
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        component * self.n_nodes + node
    }

    pub fn node_coords(&self) -> &[[f64; 3]] {
        &self.node_coords
    }

    pub fn vertex_node(&self, v: usize) -> Option<usize> {
        self.vertex_node.get(v).copied().filter(|&n| n != NONE)
    }

    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search_by(|e| e.0.cmp(&key)).ok().map(|i| self.edges[i].1)
    }

    /// Nodes lying on a facet given by its vertices.
    pub fn facet_nodes(&self, facet: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = facet.iter().filter_map(|&v| self.vertex_node(v)).collect();
        if self.degree == 2 {
            for i in 0..facet.len() {
                for j in i + 1..facet.len() {
                    if let Some(n) = self.edge_node(facet[i], facet[j]) {
                        out.push(n);
                    }
                }
            }
        }
        out
    }

    /// Sorted nodes on every facet carrying one of `tags`.
    pub fn tagged_nodes(&self, mesh: &Mesh, tags: &[BoundaryTag]) -> Vec<usize> {
        let mut out = Vec::new();
        for f in 0..mesh.n_facets() {
            if tags.contains(&mesh.facet_tag(f)) {
                out.extend(self.facet_nodes(mesh.facet(f)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nodal interpolation of `f`, which returns one value per component.
    pub fn interpolate(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let nc = self.n_components();
        let mut out = alloc::vec![0.0; self.n_dofs()];
        for (n, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            for k in 0..nc {
                out[self.dof(n, k)] = v[k];
            }
        }
        out
    }

    /// Value and physical gradient of component `k` of `coeffs` at reference
    /// point `xi` of cell `c`.
    pub fn eval(&self, mesh: &Mesh, coeffs: &[f64], c: usize, xi: [f64; 3], k: usize) -> Option<(f64, [f64; 3])> {
        let nodes = self.cell_nodes(c)?;
        let map = CellMap::new(mesh, c);
        let (vals, grads) = reference_basis_eval(self.dim, self.degree, xi);
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (i, &n) in nodes.iter().enumerate() {
            let a = coeffs[self.dof(n, k)];
            v += a * vals[i];
            let gi = map.grad(grads[i]);
            for d in 0..3 {
                g[d] += a * gi[d];
            }
        }
        Some((v, g))
    }
}

/// Build the dof map of a Lagrange space of degree 1 or 2.
pub fn build_dof_map(mesh: &Mesh, rank: Rank, degree: usize, support: Support) -> Result<FunctionSpace> {
    build_with_topology(mesh, &mesh.topology(), rank, degree, support)
}

pub fn build_with_topology(
    mesh: &Mesh,
    topo: &Topology,
    rank: Rank,
    degree: usize,
    support: Support,
) -> Result<FunctionSpace> {
    if degree != 1 && degree != 2 {
        return Err(Error::InvalidParameter {
            name: "degree",
            reason: alloc::format!("Lagrange degree {degree} is not 1 or 2"),
        });
    }
    let dim = mesh.dim();
    let cells: Vec<usize> = (0..mesh.n_cells())
        .filter(|&c| support == Support::Whole || mesh.region(c) == RegionTag::AqueousHumor)
        .collect();
    if cells.is_empty() {
        return Err(Error::MissingFlowRegion);
    }
    let mut vertex_node = alloc::vec![NONE; mesh.n_vertices()];
    for &c in &cells {
        for &v in mesh.cell(c) {
            vertex_node[v] = 0;
        }
    }
    let mut n_nodes = 0;
    let mut node_coords = Vec::new();
    for (v, slot) in vertex_node.iter_mut().enumerate() {
        if *slot != NONE {
            *slot = n_nodes;
            node_coords.push(mesh.vertex(v));
            n_nodes += 1;
        }
    }
    let mut edges = Vec::new();
    let mut edge_node = alloc::vec![NONE; if degree == 2 { topo.n_edges() } else { 0 }];
    if degree == 2 {
        for &c in &cells {
            for &e in topo.cell_edges(c) {
                edge_node[e] = 0;
            }
        }
        for (e, slot) in edge_node.iter_mut().enumerate() {
            if *slot != NONE {
                *slot = n_nodes;
                let [a, b] = topo.edges()[e];
                let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
                node_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
                edges.push(([a, b], n_nodes));
                n_nodes += 1;
            }
        }
    }
    let nl = n_local(dim, degree);
    let mut cell_nodes = Vec::with_capacity(cells.len() * nl);
    for &c in &cells {
        for &v in mesh.cell(c) {
            cell_nodes.push(vertex_node[v]);
        }
        if degree == 2 {
            for &e in topo.cell_edges(c) {
                cell_nodes.push(edge_node[e]);
            }
        }
    }
    Ok(FunctionSpace {
        dim,
        rank,
        degree,
        support,
        n_nodes,
        n_local: nl,
        cell_nodes,
        cells,
        vertex_node,
        edges,
        node_coords,
    })
}
