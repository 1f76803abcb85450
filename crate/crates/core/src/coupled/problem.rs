use alloc::vec::Vec;

use super::newton::{newton, LinearStep, NewtonControl, NewtonReport, NonlinearSystem};
use super::{Forcing, PhysicalParams, ThermalBc};
use crate::assembly::{assemble_convection, assemble_diffusion, assemble_mass, edge_basis, facet_local_nodes, Coefficient};
use crate::femspace::{build_with_topology, edge_rule, quadrature_rule, CellMap, FunctionSpace, QuadratureRule, Rank, Support, Tabulation};
use crate::linsolve::{
    gmres, BlockLayout, BlockOptions, BlockPreconditioner, BlockSystem, CsrMatrix, DenseLu, FnOperator,
    FnPreconditioner, GmresOptions, Identity, LinearOperator, Preconditioner, SchurApproximation, DENSE_CAP,
};
use crate::math::norm2;
use crate::mesh::{BoundaryTag, Mesh, RegionTag};
use crate::{Error, Result};

const NV: usize = 6;
const NP: usize = 3;
const OFF_P: usize = 2 * NV;
const OFF_T: usize = OFF_P + NP;
const OFF_L: usize = OFF_T + NV;
const NF: usize = OFF_L + 1;

/// The three function spaces of the coupled problem and the block layout
/// of the monolithic vector.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub velocity: FunctionSpace,
    pub pressure: FunctionSpace,
    pub temperature: FunctionSpace,
    pub layout: BlockLayout,
    /// Velocity nodes on the boundary of the fluid region.
    pub wall_nodes: Vec<usize>,
}

impl Spaces {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        if mesh.dim() != 2 {
            return Err(Error::Unsupported(alloc::string::String::from("the coupled problem is two-dimensional")));
        }
        if !mesh.has_region(RegionTag::AqueousHumor) {
            return Err(Error::MissingFlowRegion);
        }
        let topo = mesh.topology();
        let velocity = build_with_topology(mesh, &topo, Rank::Vector, 2, Support::Fluid)?;
        let pressure = build_with_topology(mesh, &topo, Rank::Scalar, 1, Support::Fluid)?;
        let temperature = build_with_topology(mesh, &topo, Rank::Scalar, 2, Support::Whole)?;
        let mut wall_nodes = Vec::new();
        for &c in velocity.cells() {
            let cell = mesh.cell(c);
            for k in 0..3 {
                let outside = topo.neighbor(c, k).is_none_or(|n| mesh.region(n) != RegionTag::AqueousHumor);
                if outside {
                    let face: Vec<usize> = (0..3).filter(|&i| i != k).map(|i| cell[i]).collect();
                    wall_nodes.extend(velocity.facet_nodes(&face));
                }
            }
        }
        wall_nodes.sort_unstable();
        wall_nodes.dedup();
        let layout = BlockLayout {
            n_u: velocity.n_dofs(),
            n_p: pressure.n_dofs(),
            n_t: temperature.n_dofs(),
            lagrange: true,
        };
        Ok(Spaces { velocity, pressure, temperature, layout, wall_nodes })
    }
}

/// Monolithic coefficient vector `[u, p, θ, λ]`. The temperature block
/// holds `θ = T - t_offset`, which keeps the absolute level out of the
/// mantissa so residuals can converge below the Kelvin round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub layout: BlockLayout,
    pub t_offset: f64,
}

impl StateVector {
    pub fn zeros(layout: BlockLayout, t_offset: f64) -> Self {
        StateVector { values: alloc::vec![0.0; layout.n()], layout, t_offset }
    }

    pub fn u(&self) -> &[f64] {
        &self.values[self.layout.u()]
    }

    pub fn p(&self) -> &[f64] {
        &self.values[self.layout.p()]
    }

    /// Temperature relative to `t_offset`.
    pub fn theta(&self) -> &[f64] {
        &self.values[self.layout.t()]
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        let r = self.layout.t();
        &mut self.values[r]
    }

    /// Absolute temperature coefficients in K.
    pub fn temperature(&self) -> Vec<f64> {
        self.theta().iter().map(|t| t + self.t_offset).collect()
    }

    /// Set the temperature block from absolute values.
    pub fn set_temperature(&mut self, t: &[f64]) {
        let off = self.t_offset;
        self.theta_mut().iter_mut().zip(t).for_each(|(a, b)| *a = b - off);
    }

    pub fn lambda(&self) -> f64 {
        self.layout.lambda().map_or(0.0, |i| self.values[i])
    }
}

#[derive(Debug, Clone, Copy)]
struct RobinFacet {
    tag: BoundaryTag,
    dofs: [usize; 3],
    len: f64,
    h: f64,
    t_ext: f64,
    flux: f64,
}

/// Residual and Jacobian of the coupled problem on a fixed mesh.
pub struct CoupledProblem<'m> {
    mesh: &'m Mesh,
    spaces: Spaces,
    pub params: PhysicalParams,
    forcing: Forcing,
    /// Conductivity per cell.
    k_cell: Vec<f64>,
    cell_dofs: Vec<Vec<usize>>,
    cell_pos: Vec<Vec<usize>>,
    robin: Vec<RobinFacet>,
    dirichlet: Vec<(usize, f64)>,
    mask: Vec<bool>,
    pattern: CsrMatrix,
    quad: QuadratureRule,
    tab2: Tabulation,
    tab1: Tabulation,
    edge: Vec<(f64, f64)>,
    p_mass: CsrMatrix,
    p_lap: CsrMatrix,
    t_offset: f64,
}

fn block_of(i: usize, fluid: bool) -> u8 {
    if !fluid {
        2
    } else if i < OFF_P {
        0
    } else if i < OFF_T {
        1
    } else if i < OFF_L {
        2
    } else {
        3
    }
}

fn coupled_blocks(a: u8, b: u8) -> bool {
    matches!((a, b), (0, 0) | (0, 1) | (0, 2) | (1, 0) | (1, 3) | (2, 0) | (2, 2) | (3, 1))
}

impl<'m> CoupledProblem<'m> {
    pub fn new(
        mesh: &'m Mesh,
        params: PhysicalParams,
        thermal: &[(BoundaryTag, ThermalBc)],
        forcing: Forcing,
    ) -> Result<Self> {
        params.validate()?;
        let spaces = Spaces::new(mesh)?;
        let l = spaces.layout;
        let (su, sp, st) = (&spaces.velocity, &spaces.pressure, &spaces.temperature);
        let conductivity = params.conductivity();
        let k_cell = (0..mesh.n_cells())
            .map(|c| {
                let r = mesh.region(c);
                let k = conductivity.value(r)?;
                if k > 0.0 {
                    Ok(k)
                } else {
                    Err(Error::NonPositiveCoefficient { region: r, value: k })
                }
            })
            .collect::<Result<Vec<f64>>>()?;

        let lam = l.n() - 1;
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let tn = st.cell_nodes(c).expect("temperature covers every cell");
            let mut dofs = Vec::with_capacity(NF);
            if let (Some(un), Some(pn)) = (su.cell_nodes(c), sp.cell_nodes(c)) {
                for k in 0..2 {
                    dofs.extend(un.iter().map(|&n| su.dof(n, k)));
                }
                dofs.extend(pn.iter().map(|&n| l.n_u + n));
                dofs.extend(tn.iter().map(|&n| l.n_u + l.n_p + n));
                dofs.push(lam);
            } else {
                dofs.extend(tn.iter().map(|&n| l.n_u + l.n_p + n));
            }
            cell_dofs.push(dofs);
        }

        let mut sets: Vec<Vec<usize>> = alloc::vec![Vec::new(); l.n()];
        for dofs in &cell_dofs {
            let fluid = dofs.len() == NF;
            for (i, &r) in dofs.iter().enumerate() {
                for (j, &c) in dofs.iter().enumerate() {
                    if coupled_blocks(block_of(i, fluid), block_of(j, fluid)) {
                        sets[r].push(c);
                    }
                }
            }
        }
        for (i, set) in sets.iter_mut().enumerate() {
            set.push(i);
        }
        let pattern = CsrMatrix::from_row_sets(l.n(), l.n(), sets);
        let cell_pos = cell_dofs
            .iter()
            .map(|dofs| {
                let fluid = dofs.len() == NF;
                let mut pos = Vec::with_capacity(dofs.len() * dofs.len());
                for (i, &r) in dofs.iter().enumerate() {
                    for (j, &c) in dofs.iter().enumerate() {
                        pos.push(if coupled_blocks(block_of(i, fluid), block_of(j, fluid)) {
                            pattern.find(r, c).expect("pattern entry")
                        } else {
                            usize::MAX
                        });
                    }
                }
                pos
            })
            .collect();

        let mut dirichlet: Vec<(usize, f64)> = Vec::new();
        for &n in &spaces.wall_nodes {
            let v = forcing.velocity.as_ref().map_or([0.0; 3], |f| f(su.node_coords()[n]));
            for k in 0..2 {
                dirichlet.push((su.dof(n, k), v[k]));
            }
        }
        let mut robin = Vec::new();
        for (tag, bc) in thermal {
            if !mesh.has_tag(*tag) {
                return Err(Error::UnknownTag(*tag));
            }
            match bc {
                ThermalBc::Dirichlet(f) => {
                    for n in st.tagged_nodes(mesh, &[*tag]) {
                        dirichlet.push((l.n_u + l.n_p + n, f(st.node_coords()[n])));
                    }
                }
                &ThermalBc::Robin { h, t_ext, flux } => {
                    if !(h >= 0.0) {
                        return Err(Error::InvalidParameter {
                            name: "h",
                            reason: alloc::format!("negative transfer coefficient {h}"),
                        });
                    }
                    for f in 0..mesh.n_facets() {
                        if mesh.facet_tag(f) != *tag {
                            continue;
                        }
                        let fv = mesh.facet(f);
                        let nodes = facet_local_nodes(st, fv).expect("temperature covers every facet");
                        let off = l.n_u + l.n_p;
                        robin.push(RobinFacet {
                            tag: *tag,
                            dofs: [off + nodes[0], off + nodes[1], off + nodes[2]],
                            len: mesh.facet_measure(f),
                            h,
                            t_ext,
                            flux,
                        });
                    }
                }
            }
        }
        let t_offset = robin_t_offset(thermal);
        for (i, v) in dirichlet.iter_mut() {
            if *i >= l.n_u + l.n_p {
                *v -= t_offset;
            }
        }
        for f in robin.iter_mut() {
            f.t_ext -= t_offset;
        }
        dirichlet.sort_by_key(|e| e.0);
        dirichlet.dedup_by_key(|e| e.0);
        let mut mask = alloc::vec![false; l.n()];
        for &(i, _) in &dirichlet {
            mask[i] = true;
        }

        let quad = quadrature_rule(2, 5)?;
        let tab2 = Tabulation::new(2, 2, &quad.points);
        let tab1 = Tabulation::new(2, 1, &quad.points);
        let p_mass = assemble_mass(mesh, sp, &Coefficient::Uniform(1.0))?;
        let p_lap = assemble_diffusion(mesh, sp, &Coefficient::Uniform(1.0))?;
        Ok(CoupledProblem {
            mesh,
            spaces,
            params,
            forcing,
            k_cell,
            cell_dofs,
            cell_pos,
            robin,
            dirichlet,
            mask,
            pattern,
            quad,
            tab2,
            tab1,
            edge: edge_rule(5),
            p_mass,
            p_lap,
            t_offset,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn layout(&self) -> BlockLayout {
        self.spaces.layout
    }

    /// Reference subtracted from the stored temperature block.
    pub fn t_offset(&self) -> f64 {
        self.t_offset
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector::zeros(self.layout(), self.t_offset)
    }

    pub fn state(&self, values: Vec<f64>) -> StateVector {
        StateVector { values, layout: self.layout(), t_offset: self.t_offset }
    }

    /// Constrained unknowns with their prescribed values, sorted.
    pub fn dirichlet(&self) -> &[(usize, f64)] {
        &self.dirichlet
    }

    pub fn constrained(&self) -> &[bool] {
        &self.mask
    }

    /// Overwrite the constrained entries of `x` with their values.
    pub fn project(&self, x: &mut [f64]) {
        for &(i, v) in &self.dirichlet {
            x[i] = v;
        }
    }

    /// Scale a raw direction block by block to the magnitude of `x`, so a
    /// relative perturbation of the state is relative in every field.
    pub fn block_scaled_direction(&self, x: &StateVector, raw: &[f64]) -> Vec<f64> {
        let l = self.layout();
        let amax = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let su = amax(x.u()).max(1e-12);
        let sp = amax(x.p()).max(1e-12);
        let st = amax(x.theta()).max(1e-12);
        let mut out = raw.to_vec();
        for (i, v) in out.iter_mut().enumerate() {
            *v *= if i < l.n_u {
                su
            } else if i < l.n_u + l.n_p {
                sp
            } else if i < l.n_u + l.n_p + l.n_t {
                st
            } else {
                sp
            };
            if self.mask[i] {
                *v = 0.0;
            }
        }
        out
    }

    /// Residual and (optionally) local Jacobian of one cell.
    fn cell_kernel(&self, c: usize, x: &[f64], jac: bool) -> (Vec<f64>, Vec<f64>) {
        let dofs = &self.cell_dofs[c];
        let map = CellMap::new(self.mesh, c);
        let det = map.abs_det();
        let kc = self.k_cell[c];
        let pr = &self.params;
        // Gradients are taken of T minus the cell mean (the basis gradients
        // sum to zero), which keeps round-off proportional to the local
        // variation rather than the absolute temperature.
        let t_dofs = if dofs.len() == NF { &dofs[OFF_T..OFF_L] } else { &dofs[..] };
        let t_shift = t_dofs.iter().map(|&d| x[d]).sum::<f64>() / NV as f64;
        if dofs.len() != NF {
            let mut res = alloc::vec![0.0; NV];
            let mut mat = if jac { alloc::vec![0.0; NV * NV] } else { Vec::new() };
            for (q, &wq) in self.quad.weights.iter().enumerate() {
                let w = wq * det;
                let phi = self.tab2.values(q);
                let gr: [[f64; 3]; NV] = core::array::from_fn(|a| map.grad(self.tab2.grads(q)[a]));
                let mut gt = [0.0; 2];
                for a in 0..NV {
                    let ta = x[dofs[a]] - t_shift;
                    gt[0] += ta * gr[a][0];
                    gt[1] += ta * gr[a][1];
                }
                let fh = self.forcing.heat.as_ref().map_or(0.0, |f| f(map.map(self.quad.points[q])));
                for i in 0..NV {
                    res[i] += w * (kc * (gt[0] * gr[i][0] + gt[1] * gr[i][1]) - fh * phi[i]);
                    if jac {
                        for j in 0..NV {
                            mat[i * NV + j] += w * kc * (gr[j][0] * gr[i][0] + gr[j][1] * gr[i][1]);
                        }
                    }
                }
            }
            return (res, mat);
        }

        let (mu, rho, beta) = (pr.mu, pr.rho, pr.beta);
        let rcp = pr.rho * pr.cp;
        let g = pr.gravity();
        let xl: [f64; NF] = core::array::from_fn(|i| x[dofs[i]]);
        let lam = xl[OFF_L];
        let mut res = alloc::vec![0.0; NF];
        let mut mat = if jac { alloc::vec![0.0; NF * NF] } else { Vec::new() };
        for (q, &wq) in self.quad.weights.iter().enumerate() {
            let w = wq * det;
            let phi = self.tab2.values(q);
            let psi = self.tab1.values(q);
            let gr: [[f64; 3]; NV] = core::array::from_fn(|a| map.grad(self.tab2.grads(q)[a]));
            let mut u = [0.0; 2];
            let mut gu = [[0.0; 2]; 2];
            let mut t = 0.0;
            let mut gt = [0.0; 2];
            for a in 0..NV {
                for k in 0..2 {
                    let ua = xl[k * NV + a];
                    u[k] += ua * phi[a];
                    gu[k][0] += ua * gr[a][0];
                    gu[k][1] += ua * gr[a][1];
                }
                let ta = xl[OFF_T + a] - t_shift;
                t += ta * phi[a];
                gt[0] += ta * gr[a][0];
                gt[1] += ta * gr[a][1];
            }
            let dt_ref = t + (t_shift + self.t_offset - pr.t_ref);
            let p: f64 = (0..NP).map(|b| xl[OFF_P + b] * psi[b]).sum();
            let needs_x = self.forcing.momentum.is_some() || self.forcing.heat.is_some();
            let xq = if needs_x { map.map(self.quad.points[q]) } else { [0.0; 3] };
            let f = self.forcing.momentum.as_ref().map_or([0.0; 3], |f| f(xq));
            let fh = self.forcing.heat.as_ref().map_or(0.0, |f| f(xq));
            let adv: [f64; NV] = core::array::from_fn(|a| u[0] * gr[a][0] + u[1] * gr[a][1]);
            let div = gu[0][0] + gu[1][1];
            let bu = rho * beta * dt_ref;
            for k in 0..2 {
                let conv = u[0] * gu[k][0] + u[1] * gu[k][1];
                for i in 0..NV {
                    res[k * NV + i] += w
                        * (rho * conv * phi[i] + mu * (gu[k][0] * gr[i][0] + gu[k][1] * gr[i][1]) - p * gr[i][k]
                            + bu * g[k] * phi[i]
                            - f[k] * phi[i]);
                }
            }
            for i in 0..NP {
                res[OFF_P + i] += w * (lam - div) * psi[i];
            }
            let ugt = u[0] * gt[0] + u[1] * gt[1];
            for i in 0..NV {
                res[OFF_T + i] += w * (rcp * ugt * phi[i] + kc * (gt[0] * gr[i][0] + gt[1] * gr[i][1]) - fh * phi[i]);
            }
            res[OFF_L] += w * p;
            if !jac {
                continue;
            }
            for i in 0..NV {
                for j in 0..NV {
                    let lap = gr[j][0] * gr[i][0] + gr[j][1] * gr[i][1];
                    let pp = phi[j] * phi[i];
                    let base = w * (rho * adv[j] * phi[i] + mu * lap);
                    for k in 0..2 {
                        let row = (k * NV + i) * NF;
                        for l in 0..2 {
                            let mut v = w * rho * pp * gu[k][l];
                            if k == l {
                                v += base;
                            }
                            mat[row + l * NV + j] += v;
                        }
                        mat[row + OFF_T + j] += w * rho * beta * g[k] * pp;
                    }
                    let trow = (OFF_T + i) * NF;
                    for l in 0..2 {
                        mat[trow + l * NV + j] += w * rcp * pp * gt[l];
                    }
                    mat[trow + OFF_T + j] += w * (rcp * adv[j] * phi[i] + kc * lap);
                }
                for j in 0..NP {
                    for k in 0..2 {
                        let v = -w * psi[j] * gr[i][k];
                        mat[(k * NV + i) * NF + OFF_P + j] += v;
                        mat[(OFF_P + j) * NF + k * NV + i] += v;
                    }
                }
            }
            for i in 0..NP {
                mat[(OFF_P + i) * NF + OFF_L] += w * psi[i];
                mat[OFF_L * NF + OFF_P + i] += w * psi[i];
            }
        }
        (res, mat)
    }

    fn assemble(&self, x: &[f64], jac: bool) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
        self.assemble_with(x, jac, true)
    }

    fn assemble_with(&self, x: &[f64], jac: bool, constrain: bool) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
        let l = self.layout();
        if x.len() != l.n() {
            return Err(Error::DimensionMismatch(alloc::format!("state of length {} for {} unknowns", x.len(), l.n())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite("state vector"));
        }
        let parts = crate::par::map_indexed(self.mesh.n_cells(), |c| self.cell_kernel(c, x, jac));
        let mut r = alloc::vec![0.0; l.n()];
        let mut m = if jac { Some(self.pattern.clone()) } else { None };
        for (c, (res, mat)) in parts.into_iter().enumerate() {
            let dofs = &self.cell_dofs[c];
            for (i, &d) in dofs.iter().enumerate() {
                r[d] += res[i];
            }
            if let Some(m) = m.as_mut() {
                let vals = m.values_mut();
                for (&pos, &v) in self.cell_pos[c].iter().zip(&mat) {
                    if pos != usize::MAX {
                        vals[pos] += v;
                    }
                }
            }
        }
        for f in &self.robin {
            let tl = [x[f.dofs[0]], x[f.dofs[1]], x[f.dofs[2]]];
            for &(s, wq) in &self.edge {
                let b = edge_basis(2, s);
                let dt = (tl[0] - f.t_ext) * b[0] + (tl[1] - f.t_ext) * b[1] + (tl[2] - f.t_ext) * b[2];
                let w = wq * f.len;
                let flux = f.h * dt + f.flux;
                for i in 0..3 {
                    r[f.dofs[i]] += w * flux * b[i];
                }
                if let Some(m) = m.as_mut() {
                    for i in 0..3 {
                        for j in 0..3 {
                            let k = m.find(f.dofs[i], f.dofs[j]).expect("facet entry in pattern");
                            m.values_mut()[k] += w * f.h * b[i] * b[j];
                        }
                    }
                }
            }
        }
        let li = l.n() - 1;
        r[li] -= self.forcing.pressure_integral;
        if !constrain {
            return Ok((r, m));
        }
        for &(i, v) in &self.dirichlet {
            r[i] = x[i] - v;
        }
        if let Some(m) = m.as_mut() {
            m.constrain_rows(&self.mask, true);
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite("residual"));
        }
        Ok((r, m))
    }

    /// Heat leaving through each Robin-tagged boundary, W per meter of
    /// depth, integrated with the same rule as the residual.
    pub fn boundary_heat_flow(&self, x: &StateVector) -> Vec<(BoundaryTag, f64)> {
        let mut out: Vec<(BoundaryTag, f64)> = Vec::new();
        for f in &self.robin {
            let tl = [x.values[f.dofs[0]], x.values[f.dofs[1]], x.values[f.dofs[2]]];
            let mut q = 0.0;
            for &(s, wq) in &self.edge {
                let b = edge_basis(2, s);
                let dt = (tl[0] - f.t_ext) * b[0] + (tl[1] - f.t_ext) * b[1] + (tl[2] - f.t_ext) * b[2];
                q += wq * f.len * (f.h * dt + f.flux);
            }
            match out.iter_mut().find(|e| e.0 == f.tag) {
                Some(e) => e.1 += q,
                None => out.push((f.tag, q)),
            }
        }
        out
    }

    /// Residual without the Dirichlet substitution: constrained rows hold
    /// the weak boundary reaction, e.g. the heat entering through a wall of
    /// prescribed temperature.
    pub fn unconstrained_residual(&self, x: &StateVector) -> Result<Vec<f64>> {
        Ok(self.assemble_with(&x.values, false, false)?.0)
    }

    pub fn residual(&self, x: &StateVector) -> Result<Vec<f64>> {
        Ok(self.assemble(&x.values, false)?.0)
    }

    pub fn jacobian(&self, x: &StateVector) -> Result<BlockSystem> {
        let (_, m) = self.assemble(&x.values, true)?;
        BlockSystem::new(m.expect("matrix requested"), self.layout())
    }

    pub fn residual_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, BlockSystem)> {
        let (r, m) = self.assemble(x, true)?;
        Ok((r, BlockSystem::new(m.expect("matrix requested"), self.layout())?))
    }

    /// Pressure convection-diffusion operators at the velocity of `x`.
    pub fn schur_approximation(&self, x: &[f64], kind: SchurKind) -> Result<SchurApproximation> {
        let l = self.layout();
        Ok(match kind {
            SchurKind::Mass => SchurApproximation::Mass { mass: self.p_mass.clone(), mu: self.params.mu },
            SchurKind::Pcd => SchurApproximation::Pcd {
                mass: self.p_mass.clone(),
                laplacian: self.p_lap.clone(),
                convection: assemble_convection(
                    self.mesh,
                    &self.spaces.pressure,
                    &self.spaces.velocity,
                    &x[l.u()],
                    &Coefficient::Uniform(1.0),
                )?,
                mu: self.params.mu,
                rho: self.params.rho,
            },
        })
    }

    /// `u = 0`, `p = 0` and the temperature of the linear heat problem
    /// without advection, from one SPD solve.
    pub fn initial_guess(&self) -> Result<StateVector> {
        let l = self.layout();
        let mut x = self.zero_state();
        self.project(&mut x.values);
        let (r, sys) = self.residual_and_jacobian(&x.values)?;
        let k = sys.k_tt();
        let rhs: Vec<f64> = r[l.t()].iter().map(|v| -v).collect();
        let pre = crate::linsolve::Jacobi::new(&k)?;
        let scale = norm2(&rhs);
        let res = crate::linsolve::conjugate_gradient(&k, &rhs, None, &pre, 1e-13, 20 * k.nrows() + 100)?;
        if !res.converged && res.residual > 1e-9 * scale {
            return Err(Error::LinearSolve(alloc::format!(
                "heat solve stopped at relative residual {:.3e}",
                res.residual / scale.max(f64::MIN_POSITIVE)
            )));
        }
        for (t, d) in x.theta_mut().iter_mut().zip(&res.x) {
            *t += d;
        }
        self.project(&mut x.values);
        Ok(x)
    }

    /// Newton solve from `x0` (the heat-only guess by default), retrying
    /// with buoyancy continuation when requested and the direct run fails.
    pub fn solve(&mut self, x0: Option<StateVector>, opts: &SolveOptions) -> Result<(StateVector, NewtonReport)> {
        let start = match x0 {
            Some(x) => x,
            None => self.initial_guess()?,
        };
        let mut xs = start.values.clone();
        self.project(&mut xs);
        let (x, report) = newton(&CoupledSolver::new(self, opts.linear.clone(), &xs)?, &xs, &opts.newton)?;
        if report.converged || !opts.continuation || self.params.beta == 0.0 {
            return Ok((self.state(x), report));
        }
        let beta = self.params.beta;
        let mut x = start.values;
        let mut last = report;
        for frac in [0.25, 0.5, 1.0] {
            self.params.beta = frac * beta;
            let (xn, rep) = newton(&CoupledSolver::new(self, opts.linear.clone(), &x)?, &x, &opts.newton)?;
            x = xn;
            last = rep;
            if !last.converged {
                break;
            }
        }
        self.params.beta = beta;
        Ok((self.state(x), last))
    }
}

/// Mean exterior temperature of the Robin conditions, or zero without any.
fn robin_t_offset(thermal: &[(BoundaryTag, ThermalBc)]) -> f64 {
    let ext: Vec<f64> = thermal
        .iter()
        .filter_map(|(_, bc)| match bc {
            ThermalBc::Robin { t_ext, .. } => Some(*t_ext),
            ThermalBc::Dirichlet(_) => None,
        })
        .collect();
    if ext.is_empty() {
        0.0
    } else {
        ext.iter().sum::<f64>() / ext.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchurKind {
    Pcd,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    /// Dense LU; only for systems below the dense size cap.
    Direct,
    Gmres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOptions {
    pub method: LinearMethod,
    pub preconditioned: bool,
    pub schur: SchurKind,
    pub block: BlockOptions,
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Also run unpreconditioned GMRES on every step and record its count.
    pub compare_unpreconditioned: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            method: LinearMethod::Gmres,
            preconditioned: true,
            schur: SchurKind::Pcd,
            block: BlockOptions::default(),
            rtol: 1e-10,
            restart: 100,
            max_iter: 500,
            compare_unpreconditioned: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveOptions {
    pub newton: NewtonControl,
    pub linear: LinearOptions,
    pub continuation: bool,
}

/// A [`CoupledProblem`] paired with a linear strategy, as seen by Newton.
///
/// Residuals are measured with one weight per block (velocity, pressure,
/// temperature, multiplier), the inverse of the largest Jacobian entry in
/// that block's rows at the starting state, so each block reads in units of
/// its own unknown.
pub struct CoupledSolver<'p, 'm> {
    pub problem: &'p CoupledProblem<'m>,
    pub opts: LinearOptions,
    weights: Vec<f64>,
}

impl<'p, 'm> CoupledSolver<'p, 'm> {
    pub fn new(problem: &'p CoupledProblem<'m>, opts: LinearOptions, x0: &[f64]) -> Result<Self> {
        let (_, sys) = problem.residual_and_jacobian(x0)?;
        let weights = problem.block_weights(&sys.matrix);
        Ok(CoupledSolver { problem, opts, weights })
    }

    pub fn unweighted(problem: &'p CoupledProblem<'m>, opts: LinearOptions) -> Self {
        CoupledSolver { problem, opts, weights: alloc::vec![1.0; problem.layout().n()] }
    }
}

impl<'m> CoupledProblem<'m> {
    /// Per-row weights, constant on each block: the inverse of the largest
    /// absolute entry over the block's unconstrained rows.
    pub fn block_weights(&self, m: &CsrMatrix) -> Vec<f64> {
        let l = self.layout();
        let ranges = [l.u(), l.p(), l.t(), l.n() - 1..l.n()];
        let mut w = alloc::vec![1.0; l.n()];
        for rg in ranges {
            let mut big = 0.0f64;
            for i in rg.clone() {
                if !self.mask[i] {
                    big = m.row(i).1.iter().fold(big, |a, v| a.max(v.abs()));
                }
            }
            let s = if big > 0.0 { 1.0 / big } else { 1.0 };
            for i in rg {
                w[i] = s;
            }
        }
        w
    }
}

impl NonlinearSystem for CoupledSolver<'_, '_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.problem.assemble(x, false)?.0)
    }

    fn weights(&self) -> Option<&[f64]> {
        Some(&self.weights)
    }

    fn linear_step(&self, x: &[f64], r: &[f64], atol: f64) -> Result<LinearStep> {
        let (_, sys) = self.problem.residual_and_jacobian(x)?;
        let n = r.len();
        if self.opts.method == LinearMethod::Direct {
            if n > DENSE_CAP {
                return Err(Error::TooLarge { n, cap: DENSE_CAP });
            }
            let b: Vec<f64> = r.iter().map(|v| -v).collect();
            let lu = DenseLu::new(n, &sys.matrix.to_dense())?;
            return Ok(LinearStep { delta: lu.solve(&b), iterations: 1, converged: true, reference_iterations: None });
        }
        // GMRES on the row-weighted system W J δ = -W r, so its residual is
        // the Newton residual norm; the preconditioner sees W⁻¹ z.
        let w = &self.weights;
        let b: Vec<f64> = r.iter().zip(w).map(|(v, s)| -v * s).collect();
        let op = FnOperator {
            n,
            f: |v: &[f64], y: &mut [f64]| {
                sys.matrix.apply(v, y);
                y.iter_mut().zip(w).for_each(|(a, s)| *a *= s);
            },
        };
        let gopts = GmresOptions { tol: self.opts.rtol, atol, max_iter: self.opts.max_iter, restart: self.opts.restart };
        let res = if self.opts.preconditioned {
            let schur = self.problem.schur_approximation(x, self.opts.schur)?;
            let pre = BlockPreconditioner::new(&sys, schur, &self.opts.block)?;
            let scaled = FnPreconditioner(|v: &[f64], z: &mut [f64]| {
                let u: Vec<f64> = v.iter().zip(w).map(|(a, s)| a / s).collect();
                pre.apply(&u, z);
            });
            gmres(&op, &b, None, &scaled, &gopts)?
        } else {
            gmres(&op, &b, None, &Identity, &gopts)?
        };
        let reference_iterations = if self.opts.compare_unpreconditioned {
            Some(gmres(&op, &b, None, &Identity, &gopts)?.iterations)
        } else {
            None
        };
        Ok(LinearStep { delta: res.x, iterations: res.iterations, converged: res.converged, reference_iterations })
    }
}

/// Forward-difference check of the Jacobian: for each direction `v`
/// returns `‖(R(x + εv) − R(x))/ε − J v‖ / ‖J v‖` with
/// `ε = 1e-6 ‖x‖ / ‖v‖`. Constrained entries of `v` are zeroed first, since
/// the Jacobian eliminates those columns.
pub fn fd_check(problem: &CoupledProblem<'_>, x: &StateVector, directions: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (r0, sys) = problem.residual_and_jacobian(&x.values)?;
    let xn = norm2(&x.values).max(f64::MIN_POSITIVE);
    directions
        .iter()
        .map(|v| {
            let v: Vec<f64> = v.iter().zip(problem.constrained()).map(|(&a, &m)| if m { 0.0 } else { a }).collect();
            let v = &v;
            let eps = 1e-6 * xn / norm2(v).max(f64::MIN_POSITIVE);
            let xe: Vec<f64> = x.values.iter().zip(v).map(|(a, b)| a + eps * b).collect();
            let re = problem.assemble(&xe, false)?.0;
            let jv = sys.matrix.matvec(v);
            let diff: Vec<f64> = re.iter().zip(&r0).zip(&jv).map(|((a, b), j)| (a - b) / eps - j).collect();
            Ok(norm2(&diff) / norm2(&jv).max(f64::MIN_POSITIVE))
        })
        .collect()
}
