use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;
use core::ops::Range;

use super::{
    conjugate_gradient, gmres, CsrMatrix, DenseLu, EnvelopeLu, GmresOptions, Ilu0, Jacobi, Preconditioner,
    TwoDomainSchwarz,
};
use crate::math::dot;
use crate::{Error, Result};

/// Partition of the monolithic unknowns: velocity, pressure, temperature and
/// an optional scalar multiplier fixing the pressure mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_u: usize,
    pub n_p: usize,
    pub n_t: usize,
    pub lagrange: bool,
}

impl BlockLayout {
    pub fn u(&self) -> Range<usize> {
        0..self.n_u
    }

    pub fn p(&self) -> Range<usize> {
        self.n_u..self.n_u + self.n_p
    }

    pub fn t(&self) -> Range<usize> {
        self.n_u + self.n_p..self.n_u + self.n_p + self.n_t
    }

    pub fn lambda(&self) -> Option<usize> {
        self.lagrange.then_some(self.n_u + self.n_p + self.n_t)
    }

    pub fn n(&self) -> usize {
        self.n_u + self.n_p + self.n_t + usize::from(self.lagrange)
    }
}

/// Monolithic matrix together with its block partition.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub layout: BlockLayout,
}

impl BlockSystem {
    pub fn new(matrix: CsrMatrix, layout: BlockLayout) -> Result<Self> {
        if matrix.nrows() != layout.n() || matrix.ncols() != layout.n() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "matrix {}x{} vs partition of {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.n()
            )));
        }
        Ok(BlockSystem { matrix, layout })
    }

    pub fn a_uu(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.u(), self.layout.u())
    }

    /// Pressure gradient block (velocity rows, pressure columns).
    pub fn b_up(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.u(), self.layout.p())
    }

    /// Divergence block (pressure rows, velocity columns).
    pub fn b_pu(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.p(), self.layout.u())
    }

    /// Buoyancy coupling (velocity rows, temperature columns).
    pub fn c_ut(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.u(), self.layout.t())
    }

    /// Convective coupling (temperature rows, velocity columns).
    pub fn d_tu(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.t(), self.layout.u())
    }

    pub fn k_tt(&self) -> CsrMatrix {
        self.matrix.submatrix(self.layout.t(), self.layout.t())
    }

    /// Column of the multiplier restricted to the pressure rows.
    pub fn lagrange_column(&self) -> Option<Vec<f64>> {
        let l = self.layout.lambda()?;
        Some(self.layout.p().map(|i| self.matrix.get(i, l)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubSolver {
    /// ILU(0) of the whole block.
    Ilu0,
    /// Two overlapping subdomains with ILU(0) each.
    Schwarz { overlap: usize },
    /// Dense LU, for small test systems.
    Exact,
    /// Envelope LU after reverse Cuthill-McKee ordering; falls back to
    /// ILU(0) inner GMRES when the envelope would exceed `max_entries`.
    Envelope { max_entries: usize },
}

/// Approximation of the pressure Schur complement `-B A⁻¹ Bᵀ`.
#[derive(Debug, Clone)]
pub enum SchurApproximation {
    /// Pressure convection-diffusion: `Ŝ⁻¹ = -(μ M⁻¹ + ρ L⁻¹ N M⁻¹)` with the
    /// pressure mass `M`, Laplacian `L` and convection `N`.
    Pcd { mass: CsrMatrix, laplacian: CsrMatrix, convection: CsrMatrix, mu: f64, rho: f64 },
    /// Scaled pressure mass matrix, `Ŝ⁻¹ = -μ M⁻¹`.
    Mass { mass: CsrMatrix, mu: f64 },
    /// Explicit dense Schur complement (row-major), for small systems.
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOptions {
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub sub: SubSolver,
}

impl Default for BlockOptions {
    fn default() -> Self {
        BlockOptions { inner_tol: 1e-2, inner_max_iter: 200, sub: SubSolver::Envelope { max_entries: ENVELOPE_MAX } }
    }
}

struct InnerSolve {
    mat: CsrMatrix,
    pre: Option<Box<dyn Preconditioner>>,
    exact: Option<Box<dyn Preconditioner>>,
    opts: GmresOptions,
    iterations: Cell<usize>,
}

impl InnerSolve {
    fn new(mat: CsrMatrix, opts: &BlockOptions) -> Result<Self> {
        type Boxed = Option<Box<dyn Preconditioner>>;
        let (pre, exact): (Boxed, Boxed) = match opts.sub {
            SubSolver::Ilu0 => (Some(Box::new(Ilu0::new(&mat)?)), None),
            SubSolver::Schwarz { overlap } => (Some(Box::new(TwoDomainSchwarz::new(&mat, overlap)?)), None),
            SubSolver::Exact => (None, Some(Box::new(DenseLu::new(mat.nrows(), &mat.to_dense())?))),
            SubSolver::Envelope { max_entries } => match EnvelopeLu::new(&mat, max_entries) {
                Ok(lu) => (None, Some(Box::new(lu))),
                Err(Error::TooLarge { .. }) => (Some(Box::new(Ilu0::new(&mat)?)), None),
                Err(e) => return Err(e),
            },
        };
        let gm = GmresOptions { tol: opts.inner_tol, atol: 0.0, max_iter: opts.inner_max_iter, restart: 50 };
        Ok(InnerSolve { mat, pre, exact, opts: gm, iterations: Cell::new(0) })
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        if let Some(lu) = &self.exact {
            lu.apply(r, z);
            return;
        }
        let pre = self.pre.as_deref().expect("preconditioner");
        match gmres(&self.mat, r, None, pre, &self.opts) {
            Ok(res) => {
                self.iterations.set(self.iterations.get() + res.iterations);
                z.copy_from_slice(&res.x);
            }
            // A failed inner solve degrades to the bare sub-preconditioner.
            Err(_) => pre.apply(r, z),
        }
    }
}

struct SpdSolve {
    mat: CsrMatrix,
    pre: Jacobi,
    /// Dense factor when the operator is small enough.
    lu: Option<DenseLu>,
    /// Pinned Neumann operators: the mean is projected out of rhs and result.
    singular: bool,
}

/// Pressure operators at or below this size are factored densely.
const SPD_DENSE_MAX: usize = 1500;

/// Envelope size above which block solves fall back to ILU(0) inner GMRES
/// (about 400 MB of factors).
pub const ENVELOPE_MAX: usize = 25_000_000;

impl SpdSolve {
    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let mut rhs = r.to_vec();
        if self.singular {
            let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
            rhs.iter_mut().for_each(|x| *x -= mean);
            rhs[0] = 0.0;
        }
        if let Some(lu) = &self.lu {
            z.copy_from_slice(&lu.solve(&rhs));
        } else {
            match conjugate_gradient(&self.mat, &rhs, None, &self.pre, 1e-8, 500) {
                Ok(res) => z.copy_from_slice(&res.x),
                Err(_) => self.pre.apply(&rhs, z),
            }
        }
        if self.singular {
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            z.iter_mut().for_each(|x| *x -= mean);
        }
    }
}

enum SchurSolve {
    Pcd { mass: SpdSolve, lap: SpdSolve, conv: CsrMatrix, mu: f64, rho: f64 },
    Mass { mass: SpdSolve, mu: f64 },
    Dense(DenseLu),
}

impl SchurSolve {
    fn apply(&self, g: &[f64], z: &mut [f64]) {
        match self {
            SchurSolve::Mass { mass, mu } => {
                mass.solve(g, z);
                z.iter_mut().for_each(|x| *x *= -mu);
            }
            SchurSolve::Pcd { mass, lap, conv, mu, rho } => {
                let mut mg = alloc::vec![0.0; g.len()];
                mass.solve(g, &mut mg);
                let ng = conv.matvec(&mg);
                let mut lg = alloc::vec![0.0; g.len()];
                lap.solve(&ng, &mut lg);
                for i in 0..g.len() {
                    z[i] = -(mu * mg[i] + rho * lg[i]);
                }
            }
            SchurSolve::Dense(lu) => z.copy_from_slice(&lu.solve(g)),
        }
    }
}

/// Block preconditioner for the coupled flow/heat Jacobian.
///
/// The temperature block is solved first and its buoyancy load is moved to
/// the momentum residual (block upper-triangular in the order fluid, heat);
/// the weak advective coupling of heat to velocity is dropped. The fluid part is the upper block-triangular factor
/// `[A, G; 0, Ŝ]` with the multiplier row bordered onto `Ŝ`.
pub struct BlockPreconditioner {
    layout: BlockLayout,
    velocity: Option<InnerSolve>,
    grad: CsrMatrix,
    buoyancy: CsrMatrix,
    schur: Option<SchurSolve>,
    mean_row: Option<(Vec<f64>, Vec<f64>, f64)>,
    heat: Option<InnerSolve>,
    applications: Cell<usize>,
}

impl BlockPreconditioner {
    pub fn new(system: &BlockSystem, schur: SchurApproximation, opts: &BlockOptions) -> Result<Self> {
        let layout = system.layout;
        let heat = if layout.n_t > 0 { Some(InnerSolve::new(system.k_tt(), opts)?) } else { None };
        let buoyancy = system.c_ut();
        let (velocity, grad, schur, mean_row) = if layout.n_u > 0 {
            let velocity = InnerSolve::new(system.a_uu(), opts)?;
            let schur = match schur {
                SchurApproximation::Mass { mass, mu } => SchurSolve::Mass { mass: spd(mass, false)?, mu },
                SchurApproximation::Pcd { mass, laplacian, convection, mu, rho } => SchurSolve::Pcd {
                    mass: spd(mass, false)?,
                    lap: spd(pin_first(laplacian), true)?,
                    conv: convection,
                    mu,
                    rho,
                },
                SchurApproximation::Dense(s) => SchurSolve::Dense(DenseLu::new(layout.n_p, &s)?),
            };
            let mean_row = match system.lagrange_column() {
                Some(m) => {
                    let mut w = alloc::vec![0.0; layout.n_p];
                    schur.apply(&m, &mut w);
                    let mw = dot(&m, &w);
                    if mw == 0.0 || !mw.is_finite() {
                        return Err(Error::LinearSolve(String::from("singular bordered Schur approximation")));
                    }
                    Some((m, w, mw))
                }
                None => None,
            };
            (Some(velocity), system.b_up(), Some(schur), mean_row)
        } else {
            (None, CsrMatrix::identity(0), None, None)
        };
        Ok(BlockPreconditioner { layout, velocity, grad, buoyancy, schur, mean_row, heat, applications: Cell::new(0) })
    }

    /// Inner Krylov iterations spent so far (velocity, temperature).
    pub fn inner_iterations(&self) -> (usize, usize) {
        (
            self.velocity.as_ref().map_or(0, |s| s.iterations.get()),
            self.heat.as_ref().map_or(0, |s| s.iterations.get()),
        )
    }

    pub fn applications(&self) -> usize {
        self.applications.get()
    }
}

fn spd(mat: CsrMatrix, singular: bool) -> Result<SpdSolve> {
    let lu = if mat.nrows() <= SPD_DENSE_MAX { Some(DenseLu::new(mat.nrows(), &mat.to_dense())?) } else { None };
    Ok(SpdSolve { pre: Jacobi::new(&mat)?, lu, mat, singular })
}

/// Replace the first row and column by the identity.
fn pin_first(mut a: CsrMatrix) -> CsrMatrix {
    let mut mask = alloc::vec![false; a.nrows()];
    if let Some(m) = mask.first_mut() {
        *m = true;
    }
    a.constrain_rows(&mask, true);
    a
}

impl Preconditioner for BlockPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.applications.set(self.applications.get() + 1);
        let l = self.layout;
        if let Some(heat) = &self.heat {
            heat.solve(&r[l.t()], &mut z[l.t()]);
        }
        if let (Some(vel), Some(schur)) = (&self.velocity, &self.schur) {
            let g = &r[l.p()];
            let mut zp = alloc::vec![0.0; l.n_p];
            schur.apply(g, &mut zp);
            if let (Some((m, w, mw)), Some(li)) = (&self.mean_row, l.lambda()) {
                let lam = (dot(m, &zp) - r[li]) / mw;
                for i in 0..l.n_p {
                    zp[i] -= lam * w[i];
                }
                z[li] = lam;
            }
            let gz = self.grad.matvec(&zp);
            let mut rhs: Vec<f64> = r[l.u()].iter().zip(&gz).map(|(a, b)| a - b).collect();
            if l.n_t > 0 && self.buoyancy.nnz() > 0 {
                let cz = self.buoyancy.matvec(&z[l.t()]);
                rhs.iter_mut().zip(&cz).for_each(|(a, b)| *a -= b);
            }
            vel.solve(&rhs, &mut z[l.u()]);
            z[l.p()].copy_from_slice(&zp);
        } else if let Some(li) = l.lambda() {
            z[li] = r[li];
        }
    }
}
