use alloc::string::String;

use crate::mesh::{BoundaryTag, RegionTag};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("mesher failed to reach conformity: {0}")]
    MesherFailure(String),
    #[error("unsupported quadrature degree {degree} in dimension {dim}")]
    UnsupportedQuadrature { dim: usize, degree: usize },
    #[error("mesh has no aqueous-humor cells")]
    MissingFlowRegion,
    #[error("no coefficient given for region {0}")]
    MissingCoefficient(RegionTag),
    #[error("coefficient for region {region} must be positive, got {value}")]
    NonPositiveCoefficient { region: RegionTag, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unstable velocity/pressure pair: velocity degree {velocity}, pressure degree {pressure}")]
    UnstablePair { velocity: usize, pressure: usize },
    #[error("boundary tag {0} has no facets in the mesh")]
    UnknownTag(BoundaryTag),
    #[error("zero pivot in incomplete factorization at row {row}")]
    ZeroPivot { row: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("dense solve size {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("non-finite value encountered in {0}")]
    NotFinite(&'static str),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("line search stagnated at Newton iteration {iteration}")]
    LineSearchStagnation { iteration: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutsideMesh { x: f64, y: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
