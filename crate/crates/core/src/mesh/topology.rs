use alloc::vec::Vec;

use super::Mesh;

const PAD: usize = usize::MAX;

/// Local edges of a simplex, in the order used for degree-2 edge nodes.
pub fn local_edges(dim: usize) -> &'static [[usize; 2]] {
    const TRI: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];
    const TET: [[usize; 2]; 6] = [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]];
    if dim == 2 {
        &TRI
    } else {
        &TET
    }
}

/// Sorted, padded vertex key of a face.
pub(crate) fn face_key(verts: &[usize]) -> [usize; 3] {
    let mut key = [PAD; 3];
    key[..verts.len()].copy_from_slice(verts);
    key[..verts.len()].sort_unstable();
    key
}

fn local_face(cell: &[usize], k: usize) -> [usize; 3] {
    let mut buf = [PAD; 3];
    let mut n = 0;
    for (i, &v) in cell.iter().enumerate() {
        if i != k {
            buf[n] = v;
            n += 1;
        }
    }
    face_key(&buf[..n])
}

#[derive(Debug, Clone, Copy)]
struct FaceEntry {
    key: [usize; 3],
    first: (usize, usize),
    second: Option<(usize, usize)>,
}

/// A face with a single adjacent cell.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub key: [usize; 3],
    /// Adjacent cell and the local index of the vertex opposite the face.
    pub cell: (usize, usize),
}

impl BoundaryFace {
    pub fn vertices(&self, dim: usize) -> &[usize] {
        &self.key[..dim]
    }
}

/// Derived connectivity: faces, edges and cell neighbours.
#[derive(Debug, Clone)]
pub struct Topology {
    dim: usize,
    faces: Vec<FaceEntry>,
    non_manifold: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<usize>,
    neighbors: Vec<Option<usize>>,
}

impl Topology {
    pub fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let nv = dim + 1;
        let nc = mesh.n_cells();

        let mut raw: Vec<([usize; 3], usize, usize)> = Vec::with_capacity(nc * nv);
        for c in 0..nc {
            let cell = mesh.cell(c);
            for k in 0..nv {
                raw.push((local_face(cell, k), c, k));
            }
        }
        raw.sort_unstable();
        let mut faces = Vec::with_capacity(raw.len() / 2 + 1);
        let mut non_manifold = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            let mut j = i + 1;
            while j < raw.len() && raw[j].0 == raw[i].0 {
                j += 1;
            }
            if j - i > 2 {
                non_manifold.push(raw[i].0);
            }
            faces.push(FaceEntry {
                key: raw[i].0,
                first: (raw[i].1, raw[i].2),
                second: (j - i >= 2).then(|| (raw[i + 1].1, raw[i + 1].2)),
            });
            i = j;
        }

        let mut neighbors = alloc::vec![None; nc * nv];
        for f in &faces {
            if let Some(s) = f.second {
                neighbors[f.first.0 * nv + f.first.1] = Some(s.0);
                neighbors[s.0 * nv + s.1] = Some(f.first.0);
            }
        }

        let le = local_edges(dim);
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(nc * le.len());
        for c in 0..nc {
            let cell = mesh.cell(c);
            for e in le {
                let (a, b) = (cell[e[0]], cell[e[1]]);
                edges.push([a.min(b), a.max(b)]);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut cell_edges = Vec::with_capacity(nc * le.len());
        for c in 0..nc {
            let cell = mesh.cell(c);
            for e in le {
                let (a, b) = (cell[e[0]], cell[e[1]]);
                let key = [a.min(b), a.max(b)];
                cell_edges.push(edges.binary_search(&key).expect("edge present"));
            }
        }

        Topology { dim, faces, non_manifold, edges, cell_edges, neighbors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edge indices of a cell in [`local_edges`] order.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        let k = local_edges(self.dim).len();
        &self.cell_edges[c * k..(c + 1) * k]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&[a.min(b), a.max(b)]).ok()
    }

    /// Neighbour across the face opposite local vertex `k`.
    pub fn neighbor(&self, c: usize, k: usize) -> Option<usize> {
        self.neighbors[c * (self.dim + 1) + k]
    }

    pub(crate) fn non_manifold_faces(&self) -> Vec<[usize; 3]> {
        self.non_manifold.clone()
    }

    /// Cells adjacent to the face with the given key, as `(cell, local)` pairs.
    pub(crate) fn face_cells(
        &self,
        key: &[usize; 3],
    ) -> Option<((usize, usize), Option<(usize, usize)>)> {
        self.faces
            .binary_search_by(|f| f.key.cmp(key))
            .ok()
            .map(|i| (self.faces[i].first, self.faces[i].second))
    }

    /// Cells adjacent to a facet given by its vertices.
    pub fn facet_cells(&self, verts: &[usize]) -> Option<((usize, usize), Option<(usize, usize)>)> {
        self.face_cells(&face_key(verts))
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = BoundaryFace> + '_ {
        self.faces
            .iter()
            .filter(|f| f.second.is_none())
            .map(|f| BoundaryFace { key: f.key, cell: f.first })
    }
}
