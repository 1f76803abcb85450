//! Tagged simplex meshes.
//!
//! A [`Mesh`] stores vertices, simplex cells with a [`RegionTag`] each, and a
//! list of tagged facets. Tagged facets are either on the outer boundary of
//! the domain (one adjacent cell) or on the boundary of the aqueous-humor
//! region (two adjacent cells, one of them fluid).

mod delaunay;
mod eye;
mod locate;
mod structured;
mod topology;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use delaunay::{conforming_delaunay, Pslg, PslgSegment, Triangulation};
pub use eye::{generate_eye_cross_section, EyeGeometry, EyeLandmarks};
pub use locate::{barycentric, walk, PointLocator};
pub use structured::{rectangle, unit_square, SideTags};
pub use topology::{local_edges, Topology};

use crate::{Error, Result};

/// Material region of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionTag {
    Cornea,
    AqueousHumor,
    Iris,
    Lens,
    Vitreous,
    /// Sclera, choroid and retina lumped together.
    OuterShell,
    /// Additional named regions; the id is resolved by the caller.
    Custom(u16),
}

impl RegionTag {
    pub const STANDARD: [RegionTag; 6] = [
        RegionTag::Cornea,
        RegionTag::AqueousHumor,
        RegionTag::Iris,
        RegionTag::Lens,
        RegionTag::Vitreous,
        RegionTag::OuterShell,
    ];

    pub fn is_fluid(self) -> bool {
        self == RegionTag::AqueousHumor
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionTag::Cornea => f.write_str("cornea"),
            RegionTag::AqueousHumor => f.write_str("aqueoushumor"),
            RegionTag::Iris => f.write_str("iris"),
            RegionTag::Lens => f.write_str("lens"),
            RegionTag::Vitreous => f.write_str("vitreous"),
            RegionTag::OuterShell => f.write_str("outershell"),
            RegionTag::Custom(id) => write!(f, "region_{id}"),
        }
    }
}

/// Boundary or interface label of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// Cornea side of the fluid region.
    GammaC,
    /// Iris surfaces facing the fluid.
    GammaI,
    /// Lens surface facing the fluid.
    GammaL,
    /// Vitreous interface of the posterior chamber.
    GammaVH,
    /// Scleral/ciliary side walls of the chambers.
    GammaSc,
    /// Outer surface in contact with the body.
    GammaBody,
    /// Outer surface exposed to ambient air.
    GammaAmb,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 7] = [
        BoundaryTag::GammaC,
        BoundaryTag::GammaI,
        BoundaryTag::GammaL,
        BoundaryTag::GammaVH,
        BoundaryTag::GammaSc,
        BoundaryTag::GammaBody,
        BoundaryTag::GammaAmb,
    ];

    /// Walls on which the fluid velocity vanishes.
    pub const NO_SLIP: [BoundaryTag; 5] = [
        BoundaryTag::GammaC,
        BoundaryTag::GammaI,
        BoundaryTag::GammaL,
        BoundaryTag::GammaVH,
        BoundaryTag::GammaSc,
    ];

    pub fn is_outer(self) -> bool {
        matches!(self, BoundaryTag::GammaBody | BoundaryTag::GammaAmb)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::GammaC => "gamma_c",
            BoundaryTag::GammaI => "gamma_i",
            BoundaryTag::GammaL => "gamma_l",
            BoundaryTag::GammaVH => "gamma_vh",
            BoundaryTag::GammaSc => "gamma_sc",
            BoundaryTag::GammaBody => "gamma_body",
            BoundaryTag::GammaAmb => "gamma_amb",
        };
        f.write_str(s)
    }
}

/// Simplex mesh with region and boundary tags. Coordinates are in meters;
/// 2D meshes keep `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<usize>,
    cell_region: Vec<RegionTag>,
    facets: Vec<usize>,
    facet_tag: Vec<BoundaryTag>,
}

impl Mesh {
    /// Assemble a mesh from raw arrays without validating it.
    ///
    /// `cells` holds `dim + 1` vertex indices per cell and `facets` holds
    /// `dim` indices per tagged facet.
    pub fn from_parts(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<usize>,
        cell_region: Vec<RegionTag>,
        facets: Vec<usize>,
        facet_tag: Vec<BoundaryTag>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("dimension {dim} is not 2 or 3")));
        }
        if cells.len() % (dim + 1) != 0 || cells.len() / (dim + 1) != cell_region.len() {
            return Err(Error::InvalidMesh(String::from(
                "cell array length does not match region tags",
            )));
        }
        if facets.len() % dim != 0 || facets.len() / dim != facet_tag.len() {
            return Err(Error::InvalidMesh(String::from(
                "facet array length does not match facet tags",
            )));
        }
        Ok(Mesh { dim, vertices, cells, cell_region, facets, facet_tag })
    }

    /// Like [`Mesh::from_parts`] but rejects meshes with any violation.
    pub fn checked(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<usize>,
        cell_region: Vec<RegionTag>,
        facets: Vec<usize>,
        facet_tag: Vec<BoundaryTag>,
    ) -> Result<Self> {
        let mesh = Self::from_parts(dim, vertices, cells, cell_region, facets, facet_tag)?;
        let violations = mesh.validate();
        if let Some(first) = violations.first() {
            return Err(Error::InvalidMesh(format!(
                "{} violation(s), first: {first}",
                violations.len()
            )));
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_region.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facet_tag.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> [f64; 3] {
        self.vertices[i]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn region(&self, c: usize) -> RegionTag {
        self.cell_region[c]
    }

    pub fn cell_regions(&self) -> &[RegionTag] {
        &self.cell_region
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn facet_tag(&self, f: usize) -> BoundaryTag {
        self.facet_tag[f]
    }

    pub fn facet_tags(&self) -> &[BoundaryTag] {
        &self.facet_tag
    }

    pub fn has_region(&self, region: RegionTag) -> bool {
        self.cell_region.contains(&region)
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.facet_tag.contains(&tag)
    }

    /// Signed measure of a cell (area in 2D, volume in 3D).
    pub fn signed_volume(&self, c: usize) -> f64 {
        simplex_signed_volume(self.dim, self.cell(c).iter().map(|&v| self.vertices[v]))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.signed_volume(c)).sum()
    }

    pub fn region_volume(&self, region: RegionTag) -> f64 {
        (0..self.n_cells())
            .filter(|&c| self.cell_region[c] == region)
            .map(|c| self.signed_volume(c))
            .sum()
    }

    /// Length (2D) or area (3D) of a tagged facet.
    pub fn facet_measure(&self, f: usize) -> f64 {
        let v = self.facet(f);
        let p: Vec<[f64; 3]> = v.iter().map(|&i| self.vertices[i]).collect();
        facet_measure(self.dim, &p)
    }

    pub fn tag_measure(&self, tag: BoundaryTag) -> f64 {
        (0..self.n_facets())
            .filter(|&f| self.facet_tag[f] == tag)
            .map(|f| self.facet_measure(f))
            .sum()
    }

    pub fn centroid(&self, c: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let cell = self.cell(c);
        for &v in cell {
            for k in 0..3 {
                x[k] += self.vertices[v][k];
            }
        }
        x.map(|s| s / cell.len() as f64)
    }

    /// Axis-aligned bounding box of the vertices belonging to cells of `region`.
    pub fn region_bounds(&self, region: RegionTag) -> Option<([f64; 3], [f64; 3])> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for c in 0..self.n_cells() {
            if self.cell_region[c] != region {
                continue;
            }
            any = true;
            for &v in self.cell(c) {
                for k in 0..3 {
                    lo[k] = lo[k].min(self.vertices[v][k]);
                    hi[k] = hi[k].max(self.vertices[v][k]);
                }
            }
        }
        any.then_some((lo, hi))
    }

    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Mirror image about the plane `x = 0`, with cells reoriented to keep
    /// positive volume.
    pub fn mirrored_x(&self) -> Mesh {
        let mut mesh = self.clone();
        for p in &mut mesh.vertices {
            p[0] = -p[0];
        }
        let k = self.dim + 1;
        for c in 0..self.n_cells() {
            mesh.cells.swap(c * k, c * k + 1);
        }
        mesh
    }

    /// Copy with every vertex displaced by `offset(index, position)`.
    pub fn perturbed(&self, mut offset: impl FnMut(usize, [f64; 3]) -> [f64; 3]) -> Mesh {
        let mut mesh = self.clone();
        for (i, p) in mesh.vertices.iter_mut().enumerate() {
            let d = offset(i, *p);
            for k in 0..3 {
                p[k] += d[k];
            }
        }
        mesh
    }

    /// Vertices lying on any facet that is a face of exactly one cell.
    pub fn outer_boundary_vertices(&self) -> Vec<bool> {
        let topo = Topology::new(self);
        let mut on = alloc::vec![false; self.n_vertices()];
        for face in topo.boundary_faces() {
            for &v in face.vertices(self.dim) {
                on[v] = true;
            }
        }
        on
    }

    pub fn topology(&self) -> Topology {
        Topology::new(self)
    }

    /// Check every mesh invariant and describe each failure.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.vertices.len();
        for c in 0..self.n_cells() {
            if let Some(&v) = self.cell(c).iter().find(|&&v| v >= n) {
                out.push(Violation::VertexOutOfRange { entity: Entity::Cell(c), vertex: v });
            }
        }
        for f in 0..self.n_facets() {
            if let Some(&v) = self.facet(f).iter().find(|&&v| v >= n) {
                out.push(Violation::VertexOutOfRange { entity: Entity::Facet(f), vertex: v });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for c in 0..self.n_cells() {
            let vol = self.signed_volume(c);
            if !(vol > 0.0) {
                out.push(Violation::NegativeVolume { cell: c, volume: vol });
            }
        }
        if !self.has_region(RegionTag::AqueousHumor) {
            out.push(Violation::MissingFlowRegion);
        }

        let topo = Topology::new(self);
        for face in topo.non_manifold_faces() {
            out.push(Violation::NonManifoldFace { vertices: face });
        }
        let mut tagged_keys: Vec<([usize; 3], usize)> = Vec::with_capacity(self.n_facets());
        for f in 0..self.n_facets() {
            let key = topology::face_key(self.facet(f));
            tagged_keys.push((key, f));
            match topo.face_cells(&key) {
                None => out.push(Violation::FacetNotOnCell { facet: f }),
                Some((_, None)) => {}
                Some((a, Some(b))) => {
                    let ra = self.cell_region[a.0];
                    let rb = self.cell_region[b.0];
                    if ra == rb || !(ra.is_fluid() || rb.is_fluid()) {
                        out.push(Violation::TaggedInteriorFacet { facet: f });
                    }
                }
            }
        }
        tagged_keys.sort_unstable();
        for w in tagged_keys.windows(2) {
            if w[0].0 == w[1].0 {
                out.push(Violation::DuplicateFacet { facet: w[1].1 });
            }
        }
        for face in topo.boundary_faces() {
            let key = face.key;
            if tagged_keys.binary_search_by(|probe| probe.0.cmp(&key)).is_err() {
                out.push(Violation::UntaggedBoundaryFace { vertices: key });
            }
        }
        if self.dim == 2 {
            out.extend(self.conformity_violations(&topo));
        }
        out
    }

    /// A face with a single adjacent cell must not have mesh material on its
    /// other side; otherwise the mesh has a hanging vertex or an overlap.
    fn conformity_violations(&self, topo: &Topology) -> Vec<Violation> {
        let locator = PointLocator::new(self);
        let mut out = Vec::new();
        for face in topo.boundary_faces() {
            let (cell, local) = face.cell;
            let [a, b] = [face.key[0], face.key[1]];
            let pa = self.vertices[a];
            let pb = self.vertices[b];
            let opposite = self.vertices[self.cell(cell)[local]];
            let mid = [(pa[0] + pb[0]) * 0.5, (pa[1] + pb[1]) * 0.5];
            let t = [pb[0] - pa[0], pb[1] - pa[1]];
            let mut nrm = [t[1], -t[0]];
            if nrm[0] * (opposite[0] - mid[0]) + nrm[1] * (opposite[1] - mid[1]) > 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
            let eps = 1e-6;
            let probe = [mid[0] + eps * nrm[0], mid[1] + eps * nrm[1], 0.0];
            if let Some(other) = locator.find(self, probe) {
                if other != cell {
                    out.push(Violation::NonConforming { cell: other, face: face.key });
                }
            }
        }
        out
    }
}

/// Which entity a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Cell(usize),
    Facet(usize),
}

/// One broken mesh invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VertexOutOfRange { entity: Entity, vertex: usize },
    NegativeVolume { cell: usize, volume: f64 },
    MissingFlowRegion,
    NonManifoldFace { vertices: [usize; 3] },
    FacetNotOnCell { facet: usize },
    TaggedInteriorFacet { facet: usize },
    DuplicateFacet { facet: usize },
    UntaggedBoundaryFace { vertices: [usize; 3] },
    NonConforming { cell: usize, face: [usize; 3] },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexOutOfRange { entity, vertex } => {
                write!(f, "vertex index {vertex} out of range in {entity:?}")
            }
            Violation::NegativeVolume { cell, volume } => {
                write!(f, "negative volume {volume:e} in cell {cell}")
            }
            Violation::MissingFlowRegion => f.write_str("missing flow region (no aqueoushumor cells)"),
            Violation::NonManifoldFace { vertices } => {
                write!(f, "face {vertices:?} shared by more than two cells")
            }
            Violation::FacetNotOnCell { facet } => write!(f, "tagged facet {facet} is not a cell face"),
            Violation::TaggedInteriorFacet { facet } => {
                write!(f, "tagged facet {facet} is interior and not on the fluid boundary")
            }
            Violation::DuplicateFacet { facet } => write!(f, "facet {facet} is tagged twice"),
            Violation::UntaggedBoundaryFace { vertices } => {
                write!(f, "outer boundary face {vertices:?} has no tag")
            }
            Violation::NonConforming { cell, face } => {
                write!(f, "boundary face {face:?} overlaps cell {cell} (non-conforming)")
            }
        }
    }
}

pub(crate) fn simplex_signed_volume(dim: usize, mut pts: impl Iterator<Item = [f64; 3]>) -> f64 {
    let p0 = pts.next().unwrap_or([0.0; 3]);
    let p1 = pts.next().unwrap_or(p0);
    let p2 = pts.next().unwrap_or(p0);
    let a = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let b = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
    if dim == 2 {
        return 0.5 * (a[0] * b[1] - a[1] * b[0]);
    }
    let p3 = pts.next().unwrap_or(p0);
    let c = [p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]];
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    det / 6.0
}

pub(crate) fn facet_measure(dim: usize, p: &[[f64; 3]]) -> f64 {
    use crate::math::sqrt;
    let a = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
    if dim == 2 {
        return sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    }
    let b = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
    let cx = a[1] * b[2] - a[2] * b[1];
    let cy = a[2] * b[0] - a[0] * b[2];
    let cz = a[0] * b[1] - a[1] * b[0];
    0.5 * sqrt(cx * cx + cy * cy + cz * cz)
}
