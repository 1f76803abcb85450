//! Quadrature, Lagrange reference elements and degree-of-freedom maps.
//!
//! Only P1 and P2 on triangles and tetrahedra are provided; that covers the
//! Taylor-Hood pair used for the flow and the quadratic temperature.

mod basis;
mod geometry;
mod quadrature;
mod space;

pub use basis::{n_local, reference_basis_eval, reference_nodes, Tabulation};
pub use geometry::CellMap;
pub use quadrature::{edge_rule, quadrature_rule, QuadratureRule};
pub use space::{build_dof_map, build_with_topology, FunctionSpace, Rank, Support};
