//! Sparse linear algebra: CSR storage, Krylov solvers, incomplete
//! factorizations, the block preconditioner of the coupled system and a
//! dense LU fallback.

mod block;
mod csr;
mod dense;
mod envelope;
mod ilu;
mod krylov;

pub use block::{BlockLayout, BlockOptions, ENVELOPE_MAX, BlockPreconditioner, BlockSystem, SchurApproximation, SubSolver};
pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseLu, DENSE_CAP};
pub use envelope::{rcm_ordering, EnvelopeLu};
pub use ilu::{Ilu0, Jacobi, TwoDomainSchwarz};
pub use krylov::{
    conjugate_gradient, gmres, CgResult, FnOperator, FnPreconditioner, GmresOptions, GmresResult, Identity,
    LinearOperator, Preconditioner,
};

#[cfg(test)]
mod tests;
