//! Shared fixtures for unit tests.

use alloc::vec::Vec;

use crate::mesh::{rectangle, BoundaryTag, Mesh, RegionTag, SideTags};

/// Unit square with a fluid core in [0.25, 0.75]², a solid ring around it,
/// ambient exchange on the left side and body exchange elsewhere.
pub fn box_eye(n: usize) -> Mesh {
    let tags = SideTags {
        left: BoundaryTag::GammaAmb,
        right: BoundaryTag::GammaBody,
        bottom: BoundaryTag::GammaBody,
        top: BoundaryTag::GammaBody,
    };
    let m = rectangle(n, n, [0.0, 1e-3], [0.0, 1e-3], RegionTag::OuterShell, tags);
    let mut cells = Vec::new();
    let mut regions = Vec::new();
    for c in 0..m.n_cells() {
        cells.extend_from_slice(m.cell(c));
        let x = m.centroid(c);
        let inside = (2.5e-4..7.5e-4).contains(&x[0]) && (2.5e-4..7.5e-4).contains(&x[1]);
        regions.push(if inside { RegionTag::AqueousHumor } else { RegionTag::OuterShell });
    }
    let facets: Vec<usize> = (0..m.n_facets()).flat_map(|f| m.facet(f).to_vec()).collect();
    Mesh::checked(2, m.vertices().to_vec(), cells, regions, facets, m.facet_tags().to_vec()).unwrap()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
