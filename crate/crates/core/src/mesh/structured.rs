use alloc::vec::Vec;

use super::{BoundaryTag, Mesh, RegionTag};

/// Boundary tags for the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideTags {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl SideTags {
    pub fn uniform(tag: BoundaryTag) -> Self {
        SideTags { left: tag, right: tag, bottom: tag, top: tag }
    }
}

/// Structured triangulation of `[0,1]^2` with `nx * ny` squares.
pub fn unit_square(nx: usize, ny: usize, region: RegionTag, tags: SideTags) -> Mesh {
    rectangle(nx, ny, [0.0, 1.0], [0.0, 1.0], region, tags)
}

/// Structured triangulation of a rectangle.
///
/// Each square is cut along a diagonal chosen per quadrant so that the
/// diagonals of the four corner squares pass through the domain corners; no
/// triangle then has all of its vertices on the boundary, which keeps the
/// Taylor-Hood pair free of corner pressure modes.
pub fn rectangle(
    nx: usize,
    ny: usize,
    xr: [f64; 2],
    yr: [f64; 2],
    region: RegionTag,
    tags: SideTags,
) -> Mesh {
    let nx = nx.max(1);
    let ny = ny.max(1);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Snap the last node exactly onto the far side.
            let x = if i == nx { xr[1] } else { xr[0] + (xr[1] - xr[0]) * i as f64 / nx as f64 };
            let y = if j == ny { yr[1] } else { yr[0] + (yr[1] - yr[0]) * j as f64 / ny as f64 };
            vertices.push([x, y, 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let left = 2 * i < nx;
            let low = 2 * j < ny;
            if left == low {
                cells.extend_from_slice(&[a, b, c, a, c, d]);
            } else {
                cells.extend_from_slice(&[a, b, d, b, c, d]);
            }
        }
    }
    let mut facets = Vec::new();
    let mut facet_tag = Vec::new();
    for i in 0..nx {
        facets.extend_from_slice(&[id(i, 0), id(i + 1, 0)]);
        facet_tag.push(tags.bottom);
        facets.extend_from_slice(&[id(i + 1, ny), id(i, ny)]);
        facet_tag.push(tags.top);
    }
    for j in 0..ny {
        facets.extend_from_slice(&[id(0, j + 1), id(0, j)]);
        facet_tag.push(tags.left);
        facets.extend_from_slice(&[id(nx, j), id(nx, j + 1)]);
        facet_tag.push(tags.right);
    }
    let n_cells = cells.len() / 3;
    Mesh::from_parts(2, vertices, cells, alloc::vec![region; n_cells], facets, facet_tag)
        .expect("structured rectangle is well formed")
}
