//! Evidence suite: manufactured-solution convergence of the coupled
//! problem, the differentially heated cavity and hydrostatic pressure
//! checks.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::coupled::{
    CoupledProblem, Forcing, NewtonControl, PhysicalParams, Posture, ScalarFn, SolveOptions, StateVector, ThermalBc,
    VectorFn,
};
use crate::femspace::{quadrature_rule, Tabulation};
use crate::math::{cos, sin, sqrt, PI};
use crate::mesh::{unit_square, BoundaryTag, EyeGeometry, Mesh, RegionTag, SideTags};
use crate::postproc::{in_anterior_chamber, FieldOutput, HydrostaticSpan};
use crate::{Error, Result};

#[cfg(test)]
mod tests;

/// Literature Nusselt number of the square cavity at Ra = 1e3, Pr = 0.71,
/// used only as an external sanity anchor.
pub const CAVITY_LITERATURE_NU: f64 = 1.118;

/// Closed-form fields and the forcing that makes them solve the coupled
/// equations with `params`. Temperature is prescribed on the whole boundary.
#[derive(Clone)]
pub struct MmsCase {
    pub name: &'static str,
    pub params: PhysicalParams,
    pub velocity: VectorFn,
    pub pressure: ScalarFn,
    pub temperature: ScalarFn,
    pub forcing: Forcing,
}

impl fmt::Debug for MmsCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MmsCase").field("name", &self.name).field("params", &self.params).finish()
    }
}

/// Unit physical constants with gravity along `-y`.
pub fn unit_params() -> PhysicalParams {
    PhysicalParams {
        mu: 1.0,
        rho: 1.0,
        cp: 1.0,
        beta: 1.0,
        k_ah: 1.0,
        k_solid: Vec::new(),
        g: 1.0,
        gravity_dir: [0.0, -1.0],
        t_ref: 0.0,
        ..PhysicalParams::default()
    }
}

impl MmsCase {
    /// Stream function `sin²πx sin²πy`, pressure `cos πx cos πy`, and
    /// temperature `sin πx cos πy`, with every coupling term active.
    pub fn coupled() -> Self {
        let params = unit_params();
        let (rho, mu, beta, rcp, k, t_ref) = (params.rho, params.mu, params.beta, params.rho * params.cp, params.k_ah, params.t_ref);
        let g = params.gravity();
        let pi = PI;
        let velocity: VectorFn = Arc::new(move |x| {
            let (sa, sb) = (sin(pi * x[0]), sin(pi * x[1]));
            [pi * sa * sa * sin(2.0 * pi * x[1]), -pi * sin(2.0 * pi * x[0]) * sb * sb, 0.0]
        });
        let pressure: ScalarFn = Arc::new(move |x| cos(pi * x[0]) * cos(pi * x[1]));
        let temperature: ScalarFn = Arc::new(move |x| sin(pi * x[0]) * cos(pi * x[1]));
        let momentum: VectorFn = Arc::new(move |x| {
            let (a, b) = (pi * x[0], pi * x[1]);
            let (sa, ca, sb, cb) = (sin(a), cos(a), sin(b), cos(b));
            let (s2a, c2a, s2b, c2b) = (sin(2.0 * a), cos(2.0 * a), sin(2.0 * b), cos(2.0 * b));
            let pi2 = pi * pi;
            let pi3 = pi2 * pi;
            let u = [pi * sa * sa * s2b, -pi * s2a * sb * sb];
            let gu = [[pi2 * s2a * s2b, 2.0 * pi2 * sa * sa * c2b], [-2.0 * pi2 * c2a * sb * sb, -pi2 * s2a * s2b]];
            let lap = [
                2.0 * pi3 * c2a * s2b - 4.0 * pi3 * sa * sa * s2b,
                4.0 * pi3 * s2a * sb * sb - 2.0 * pi3 * s2a * c2b,
            ];
            let gp = [-pi * sa * cb, -pi * ca * sb];
            let t = sa * cb;
            let mut f = [0.0; 3];
            for k in 0..2 {
                let conv = u[0] * gu[k][0] + u[1] * gu[k][1];
                f[k] = rho * conv - mu * lap[k] + gp[k] + rho * beta * (t - t_ref) * g[k];
            }
            f
        });
        let heat: ScalarFn = Arc::new(move |x| {
            let (a, b) = (pi * x[0], pi * x[1]);
            let (sa, ca, sb, cb) = (sin(a), cos(a), sin(b), cos(b));
            let u = [pi * sa * sa * sin(2.0 * b), -pi * sin(2.0 * a) * sb * sb];
            let gt = [pi * ca * cb, -pi * sa * sb];
            rcp * (u[0] * gt[0] + u[1] * gt[1]) + k * 2.0 * pi * pi * sa * cb
        });
        MmsCase {
            name: "coupled",
            params,
            velocity: velocity.clone(),
            pressure,
            temperature,
            forcing: Forcing { momentum: Some(momentum), heat: Some(heat), velocity: Some(velocity), pressure_integral: 0.0 },
        }
    }

    /// All fields and forcing zero.
    pub fn zero() -> Self {
        let zero_v: VectorFn = Arc::new(|_| [0.0; 3]);
        let zero_s: ScalarFn = Arc::new(|_| 0.0);
        MmsCase {
            name: "zero",
            params: unit_params(),
            velocity: zero_v.clone(),
            pressure: zero_s.clone(),
            temperature: zero_s.clone(),
            forcing: Forcing { momentum: Some(zero_v.clone()), heat: Some(zero_s), velocity: Some(zero_v), pressure_integral: 0.0 },
        }
    }

    pub fn problem<'m>(&self, mesh: &'m Mesh) -> Result<CoupledProblem<'m>> {
        let tags: Vec<BoundaryTag> = BoundaryTag::ALL.iter().copied().filter(|&t| mesh.has_tag(t)).collect();
        let thermal: Vec<(BoundaryTag, ThermalBc)> =
            tags.into_iter().map(|t| (t, ThermalBc::Dirichlet(self.temperature.clone()))).collect();
        CoupledProblem::new(mesh, self.params.clone(), &thermal, self.forcing.clone())
    }

    /// Nodal interpolant of the exact fields.
    pub fn interpolate(&self, problem: &CoupledProblem<'_>) -> StateVector {
        let s = problem.spaces();
        let mut x = problem.zero_state();
        let l = x.layout;
        let u = s.velocity.interpolate(|p| (self.velocity)(p));
        let p = s.pressure.interpolate(|q| [(self.pressure)(q), 0.0, 0.0]);
        let t = s.temperature.interpolate(|q| [(self.temperature)(q), 0.0, 0.0]);
        x.values[l.u()].copy_from_slice(&u);
        x.values[l.p()].copy_from_slice(&p);
        x.set_temperature(&t);
        x
    }
}

/// L2 errors (or, in a table of orders, observed rates) per field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldErrors {
    pub u: f64,
    pub p: f64,
    pub t: f64,
}

/// L2 norms of the difference between `x` and the exact fields.
pub fn l2_errors(case: &MmsCase, problem: &CoupledProblem<'_>, x: &StateVector) -> Result<FieldErrors> {
    let mesh = problem.mesh();
    let s = problem.spaces();
    let rule = quadrature_rule(2, 6)?;
    let tab2 = Tabulation::new(2, 2, &rule.points);
    let tab1 = Tabulation::new(2, 1, &rule.points);
    let (u, p, theta) = (x.u(), x.p(), x.theta());
    let mut e = [0.0; 3];
    for c in 0..mesh.n_cells() {
        let map = crate::femspace::CellMap::new(mesh, c);
        let det = map.abs_det();
        let tn = s.temperature.cell_nodes(c).expect("temperature covers every cell");
        let fluid = s.velocity.cell_nodes(c).zip(s.pressure.cell_nodes(c));
        for q in 0..rule.len() {
            let w = rule.weights[q] * det;
            let xq = map.map(rule.points[q]);
            let phi = tab2.values(q);
            let th: f64 = tn.iter().zip(phi).map(|(&n, b)| theta[s.temperature.dof(n, 0)] * b).sum();
            let dt = th + x.t_offset - (case.temperature)(xq);
            e[2] += w * dt * dt;
            if let Some((vn, pn)) = fluid {
                let ue = (case.velocity)(xq);
                for k in 0..2 {
                    let uh: f64 = vn.iter().zip(phi).map(|(&n, b)| u[s.velocity.dof(n, k)] * b).sum();
                    e[0] += w * (uh - ue[k]) * (uh - ue[k]);
                }
                let ph: f64 = pn.iter().zip(tab1.values(q)).map(|(&n, b)| p[s.pressure.dof(n, 0)] * b).sum();
                let dp = ph - (case.pressure)(xq);
                e[1] += w * dp * dp;
            }
        }
    }
    Ok(FieldErrors { u: sqrt(e[0]), p: sqrt(e[1]), t: sqrt(e[2]) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsLevel {
    pub h: f64,
    pub errors: FieldErrors,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsTable {
    pub case: &'static str,
    pub levels: Vec<MmsLevel>,
}

fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    if e0 == 0.0 && e1 == 0.0 {
        return f64::INFINITY;
    }
    libm::log(e0 / e1) / libm::log(h0 / h1)
}

impl MmsTable {
    /// Observed orders between consecutive levels.
    pub fn orders(&self) -> Vec<FieldErrors> {
        self.levels
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                FieldErrors {
                    u: rate(a.errors.u, b.errors.u, a.h, b.h),
                    p: rate(a.errors.p, b.errors.p, a.h, b.h),
                    t: rate(a.errors.t, b.errors.t, a.h, b.h),
                }
            })
            .collect()
    }

    /// Order between the two finest levels.
    pub fn final_orders(&self) -> Option<FieldErrors> {
        self.orders().last().copied()
    }
}

impl fmt::Display for MmsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mms case {}", self.case)?;
        writeln!(f, "{:>10} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6} {:>7}", "h", "err_u", "ord", "err_p", "ord", "err_T", "ord", "newton")?;
        let orders = self.orders();
        for (i, l) in self.levels.iter().enumerate() {
            let o = if i == 0 { None } else { Some(orders[i - 1]) };
            let show = |v: Option<f64>| o.map_or(alloc::string::String::from("-"), |_| alloc::format!("{:.2}", v.unwrap()));
            writeln!(
                f,
                "{:>10.5} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>7}",
                l.h,
                l.errors.u,
                show(o.map(|o| o.u)),
                l.errors.p,
                show(o.map(|o| o.p)),
                l.errors.t,
                show(o.map(|o| o.t)),
                l.newton_iterations
            )?;
        }
        Ok(())
    }
}

/// Fluid-only unit square with structured cells.
pub fn fluid_unit_square(n: usize) -> Mesh {
    unit_square(n, n, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaC))
}

fn mms_options() -> SolveOptions {
    let mut o = SolveOptions::default();
    o.newton = NewtonControl { rtol: 1e-10, ..o.newton };
    o
}

/// Solve `case` on unit squares with `n × n` cells per level.
pub fn run_mms(case: &MmsCase, levels: &[usize]) -> Result<MmsTable> {
    let meshes: Vec<(f64, Mesh)> = levels.iter().map(|&n| (1.0 / n as f64, fluid_unit_square(n))).collect();
    run_mms_on(case, &meshes)
}

/// Solve `case` on the given meshes of nominal size `h`, coarsest first.
pub fn run_mms_on(case: &MmsCase, meshes: &[(f64, Mesh)]) -> Result<MmsTable> {
    if meshes.len() < 3 {
        return Err(Error::InvalidParameter { name: "levels", reason: alloc::format!("need at least 3, got {}", meshes.len()) });
    }
    let mut levels = Vec::new();
    for (h, mesh) in meshes {
        let mut problem = case.problem(mesh)?;
        let (x, report) = problem.solve(None, &mms_options())?;
        if let Some(e) = report.failure() {
            return Err(e);
        }
        levels.push(MmsLevel { h: *h, errors: l2_errors(case, &problem, &x)?, newton_iterations: report.iterations() });
    }
    Ok(MmsTable { case: case.name, levels })
}

/// Interpolation errors of the exact fields, without solving.
pub fn interpolation_errors(case: &MmsCase, mesh: &Mesh) -> Result<FieldErrors> {
    let problem = case.problem(mesh)?;
    let x = case.interpolate(&problem);
    l2_errors(case, &problem, &x)
}

/// Parameters realizing `rayleigh` and `prandtl` on a unit cavity with a unit
/// temperature difference: ρ = c_p = k = β = 1, μ = Pr, g = Ra·Pr.
pub fn cavity_params(rayleigh: f64, prandtl: f64) -> PhysicalParams {
    PhysicalParams {
        mu: prandtl,
        rho: 1.0,
        cp: 1.0,
        beta: 1.0,
        k_ah: 1.0,
        k_solid: Vec::new(),
        g: rayleigh * prandtl,
        gravity_dir: [0.0, -1.0],
        t_ref: 0.5,
        ..PhysicalParams::default()
    }
}

const HOT: BoundaryTag = BoundaryTag::GammaI;
const COLD: BoundaryTag = BoundaryTag::GammaC;

/// Unit cavity: hot wall on the left, cold on the right, adiabatic lids.
pub fn cavity_mesh(n: usize) -> Mesh {
    let tags = SideTags { left: HOT, right: COLD, bottom: BoundaryTag::GammaSc, top: BoundaryTag::GammaSc };
    unit_square(n, n, RegionTag::AqueousHumor, tags)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLevel {
    pub n: usize,
    pub nu_hot: f64,
    pub nu_cold: f64,
    pub max_speed: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityResult {
    pub rayleigh: f64,
    pub prandtl: f64,
    pub levels: Vec<CavityLevel>,
    /// Richardson extrapolation of the hot-wall Nusselt number from the
    /// three finest levels.
    pub reference: f64,
    pub observed_order: f64,
}

impl CavityResult {
    /// Relative deviation of the level four times coarser than the finest
    /// from the extrapolated reference.
    pub fn relative_error(&self) -> f64 {
        let l = &self.levels[self.levels.len() - 3];
        (l.nu_hot - self.reference).abs() / self.reference
    }

    /// Whether the hot-wall values approach the reference monotonically.
    pub fn monotone(&self) -> bool {
        let d: Vec<f64> = self.levels.iter().map(|l| l.nu_hot - self.reference).collect();
        d.windows(2).all(|w| w[1].abs() <= w[0].abs() && w[0] * w[1] >= 0.0)
    }
}

impl fmt::Display for CavityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cavity Ra {:e} Pr {}", self.rayleigh, self.prandtl)?;
        writeln!(f, "{:>5} {:>12} {:>12} {:>12} {:>7}", "n", "Nu_hot", "Nu_cold", "max|u|", "newton")?;
        for l in &self.levels {
            writeln!(f, "{:>5} {:>12.6} {:>12.6} {:>12.4e} {:>7}", l.n, l.nu_hot, l.nu_cold, l.max_speed, l.newton_iterations)?;
        }
        writeln!(f, "richardson Nu {:.6} (order {:.2}), coarse error {:.3}%", self.reference, self.observed_order, 100.0 * self.relative_error())
    }
}

/// Hot- and cold-wall Nusselt numbers from the weak boundary reactions of
/// the heat equation.
pub fn cavity_nusselt(problem: &CoupledProblem<'_>, x: &StateVector) -> Result<(f64, f64)> {
    let r = problem.unconstrained_residual(x)?;
    let l = problem.layout();
    let st = &problem.spaces().temperature;
    let off = l.n_u + l.n_p;
    let k = problem.params.k_ah;
    let sum = |tag| -> f64 { st.tagged_nodes(problem.mesh(), &[tag]).iter().map(|&n| r[off + st.dof(n, 0)]).sum() };
    Ok((sum(HOT) / k, -sum(COLD) / k))
}

/// Solve the cavity at one resolution.
pub fn cavity_level(rayleigh: f64, prandtl: f64, n: usize) -> Result<CavityLevel> {
    let mesh = cavity_mesh(n);
    let one: ScalarFn = Arc::new(|_| 1.0);
    let zero: ScalarFn = Arc::new(|_| 0.0);
    let thermal = [(HOT, ThermalBc::Dirichlet(one)), (COLD, ThermalBc::Dirichlet(zero))];
    let mut problem = CoupledProblem::new(&mesh, cavity_params(rayleigh, prandtl), &thermal, Forcing::default())?;
    let opts = SolveOptions { continuation: true, ..mms_options() };
    let (x, report) = problem.solve(None, &opts)?;
    if let Some(e) = report.failure() {
        return Err(e);
    }
    let (nu_hot, nu_cold) = cavity_nusselt(&problem, &x)?;
    let max_speed = crate::postproc::max_speed(&mesh, &problem.spaces().velocity, x.u())?;
    Ok(CavityLevel { n, nu_hot, nu_cold, max_speed, newton_iterations: report.iterations() })
}

/// Average Nusselt number on successively doubled meshes with a Richardson
/// reference from the three finest.
pub fn run_cavity_benchmark(rayleigh: f64, prandtl: f64, sizes: &[usize]) -> Result<CavityResult> {
    if sizes.len() < 3 || sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter { name: "sizes", reason: alloc::string::String::from("need at least 3 successively doubled sizes") });
    }
    let levels = sizes.iter().map(|&n| cavity_level(rayleigh, prandtl, n)).collect::<Result<Vec<_>>>()?;
    let k = levels.len();
    let (a, b, c) = (levels[k - 3].nu_hot, levels[k - 2].nu_hot, levels[k - 1].nu_hot);
    let (reference, observed_order) = richardson(a, b, c);
    Ok(CavityResult { rayleigh, prandtl, levels, reference, observed_order })
}

/// Extrapolated limit and observed order from three values on meshes
/// refined by two; falls back to the finest value when the differences do
/// not contract.
pub fn richardson(a: f64, b: f64, c: f64) -> (f64, f64) {
    let (d1, d2) = (a - b, b - c);
    if d2 == 0.0 {
        return (c, f64::INFINITY);
    }
    let q = d1 / d2;
    if !(q > 1.0) {
        return (c, 0.0);
    }
    let p = libm::log2(q);
    (c - d2 / (q - 1.0), p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrostaticReport {
    pub posture: Posture,
    /// Over the anterior chamber.
    pub chamber: HydrostaticSpan,
    /// Over the whole fluid region.
    pub fluid: HydrostaticSpan,
}

/// Pressure spans of a solved eye scenario against ρ g H.
pub fn run_hydrostatic_check(output: &FieldOutput<'_>, geom: &EyeGeometry, posture: Posture) -> Result<HydrostaticReport> {
    let lm = geom.landmarks()?;
    Ok(HydrostaticReport {
        posture,
        chamber: output.hydrostatic_span(&|p| in_anterior_chamber(&lm, p)),
        fluid: output.hydrostatic_span(&|_| true),
    })
}
