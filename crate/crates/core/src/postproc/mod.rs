//! Derived quantities of a converged coupled solution: pressure in mmHg,
//! extremes, stream function and recirculation cells, line probes, wall
//! velocity samples, hydrostatic spans, the boundary heat balance and
//! vertex data for file export.

use alloc::vec::Vec;

use crate::assembly::apply_dirichlet;
use crate::coupled::{CoupledProblem, NewtonReport, Spaces, StateVector};
use crate::femspace::{quadrature_rule, CellMap, FunctionSpace, Tabulation};
use crate::linsolve::{CsrMatrix, EnvelopeLu, ENVELOPE_MAX};
use crate::math::sqrt;
use crate::mesh::{barycentric, walk, BoundaryTag, EyeGeometry, EyeLandmarks, Mesh, PointLocator, RegionTag, Topology};
use crate::{Error, Result};

#[cfg(test)]
mod tests;

pub const PA_PER_MMHG: f64 = 133.322;

/// Display value of the pressure maximum.
pub const DEFAULT_DISPLAY_OFFSET_MMHG: f64 = 15.5;

/// Quadrature degree of the points over which the speed maximum is taken.
pub const SPEED_RULE_DEGREE: usize = 4;

/// Vortices weaker than this fraction of max |ψ| are ignored.
pub const RECIRCULATION_THRESHOLD: f64 = 0.01;

pub fn pressure_to_mmhg(pa: f64, display_offset_mmhg: f64) -> f64 {
    pa / PA_PER_MMHG + display_offset_mmhg
}

/// Extreme nodal value with the boundary tags and regions touching the node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeExtremum {
    pub value: f64,
    pub point: [f64; 2],
    pub tags: Vec<BoundaryTag>,
    pub regions: Vec<RegionTag>,
}

/// Strict local extremum of the stream function. Positive `psi` turns
/// clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub point: [f64; 2],
    pub psi: f64,
}

/// Stream function on the velocity nodes, zero on the fluid boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunction {
    pub values: Vec<f64>,
    pub vortices: Vec<Vortex>,
}

impl StreamFunction {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Number of vortices whose center satisfies `inside`.
    pub fn count_where(&self, inside: impl Fn([f64; 2]) -> bool) -> usize {
        self.vortices.iter().filter(|v| inside(v.point)).count()
    }
}

/// Heat leaving through each Robin boundary, W/m.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalance {
    pub flows: Vec<(BoundaryTag, f64)>,
}

impl EnergyBalance {
    pub fn net(&self) -> f64 {
        self.flows.iter().map(|f| f.1).sum()
    }

    /// Net flow over the sum of absolute flows; zero without flows.
    pub fn relative_imbalance(&self) -> f64 {
        let gross: f64 = self.flows.iter().map(|f| f.1.abs()).sum();
        if gross > 0.0 {
            self.net().abs() / gross
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Largest speed over the quadrature points of the fluid cells.
    pub max_speed: f64,
    pub t_min: NodeExtremum,
    pub t_max: NodeExtremum,
    /// Gauge pressure relative to its maximum, so `p_max_pa` is zero.
    pub p_min_pa: f64,
    pub p_max_pa: f64,
    pub p_min_mmhg: f64,
    pub p_max_mmhg: f64,
    pub recirculation: usize,
    pub energy: EnergyBalance,
}

/// Field values at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub cell: usize,
    pub temperature: f64,
    pub velocity: [f64; 2],
    /// Gauge pressure in Pa; `None` outside the fluid.
    pub pressure_pa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub temperature: f64,
    pub speed: f64,
    pub pressure_mmhg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    /// Iris side of the anterior chamber.
    Posterior,
    Cornea,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSample {
    pub wall: Wall,
    pub point: [f64; 2],
    pub velocity: [f64; 2],
    /// Velocity component against gravity (along `+y` without gravity).
    pub upward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallPattern {
    pub samples: Vec<WallSample>,
}

impl WallPattern {
    fn all(&self, wall: Wall, pred: impl Fn(f64) -> bool) -> bool {
        let mut any = false;
        for s in self.samples.iter().filter(|s| s.wall == wall) {
            any = true;
            if !pred(s.upward) {
                return false;
            }
        }
        any
    }

    pub fn posterior_upward(&self) -> bool {
        self.all(Wall::Posterior, |v| v > 0.0)
    }

    pub fn cornea_downward(&self) -> bool {
        self.all(Wall::Cornea, |v| v < 0.0)
    }
}

/// Pressure span of a set of fluid nodes against the hydrostatic column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrostaticSpan {
    pub span_pa: f64,
    pub span_mmhg: f64,
    /// Extent of the nodes along gravity.
    pub extent_m: f64,
    pub rho_g_h_pa: f64,
    /// `span_pa / rho_g_h_pa`, when the column is non-zero.
    pub ratio: Option<f64>,
}

/// Point data on a triangle mesh for file export.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualFields {
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub cell_region: Vec<RegionTag>,
    pub velocity: Vec<[f64; 3]>,
    /// Zero at points outside the fluid.
    pub pressure_mmhg: Vec<f64>,
    pub temperature: Vec<f64>,
}

/// Converged (or flagged) solution with its metrics.
#[derive(Debug, Clone)]
pub struct FieldOutput<'m> {
    pub mesh: &'m Mesh,
    pub spaces: Spaces,
    pub state: StateVector,
    pub rho: f64,
    pub gravity: [f64; 2],
    pub display_offset_mmhg: f64,
    pub report: Option<NewtonReport>,
    pub metrics: Metrics,
    pub stream: StreamFunction,
    pub wall_samples: Vec<WallSample>,
    /// Gauge pressure per pressure dof, maximum zero.
    pressure_pa: Vec<f64>,
    topo: Topology,
    locator: PointLocator,
}

impl<'m> FieldOutput<'m> {
    pub fn new(
        problem: &CoupledProblem<'m>,
        state: StateVector,
        report: Option<NewtonReport>,
        display_offset_mmhg: f64,
    ) -> Result<Self> {
        if state.layout != problem.layout() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "state has {} entries, problem {}",
                state.values.len(),
                problem.layout().n()
            )));
        }
        let mesh = problem.mesh();
        let spaces = problem.spaces().clone();
        let rho = problem.params.rho;
        let gravity = problem.params.gravity();
        let sp = &spaces.pressure;
        let p = state.p();
        let mut pressure_pa: Vec<f64> = (0..sp.n_nodes())
            .map(|n| {
                let x = sp.node_coords()[n];
                p[sp.dof(n, 0)] + rho * (gravity[0] * x[0] + gravity[1] * x[1])
            })
            .collect();
        let top = pressure_pa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        pressure_pa.iter_mut().for_each(|v| *v -= top);
        let p_min_pa = pressure_pa.iter().cloned().fold(0.0, f64::min);

        let stream = stream_function(mesh, &spaces.velocity, &spaces.wall_nodes, state.u())?;
        let temperature = state.temperature();
        let t_extremum = |pick_max: bool| {
            let st = &spaces.temperature;
            let mut best = 0;
            for n in 1..st.n_nodes() {
                let (a, b) = (temperature[st.dof(n, 0)], temperature[st.dof(best, 0)]);
                if (pick_max && a > b) || (!pick_max && a < b) {
                    best = n;
                }
            }
            node_extremum(mesh, st, best, temperature[st.dof(best, 0)])
        };
        let metrics = Metrics {
            max_speed: max_speed(mesh, &spaces.velocity, state.u())?,
            t_min: t_extremum(false),
            t_max: t_extremum(true),
            p_min_pa,
            p_max_pa: 0.0,
            p_min_mmhg: pressure_to_mmhg(p_min_pa, display_offset_mmhg),
            p_max_mmhg: pressure_to_mmhg(0.0, display_offset_mmhg),
            recirculation: stream.vortices.len(),
            energy: EnergyBalance { flows: problem.boundary_heat_flow(&state) },
        };
        Ok(FieldOutput {
            mesh,
            spaces,
            state,
            rho,
            gravity,
            display_offset_mmhg,
            report,
            metrics,
            stream,
            wall_samples: Vec::new(),
            pressure_pa,
            topo: mesh.topology(),
            locator: PointLocator::new(mesh),
        })
    }

    /// Gauge pressure per pressure node in Pa.
    pub fn pressure_pa(&self) -> &[f64] {
        &self.pressure_pa
    }

    pub fn to_mmhg(&self, pa: f64) -> f64 {
        pressure_to_mmhg(pa, self.display_offset_mmhg)
    }

    /// Field values at `p` in cell `c`.
    pub fn sample_in(&self, c: usize, p: [f64; 2]) -> PointSample {
        let l = barycentric(self.mesh, c, [p[0], p[1], 0.0]);
        let xi = [l[1], l[2], 0.0];
        let s = &self.spaces;
        let (theta, _) = s.temperature.eval(self.mesh, self.state.theta(), c, xi, 0).expect("temperature covers every cell");
        let mut velocity = [0.0; 2];
        let mut pressure_pa = None;
        if s.velocity.supports_cell(c) {
            for (k, v) in velocity.iter_mut().enumerate() {
                *v = s.velocity.eval(self.mesh, self.state.u(), c, xi, k).map_or(0.0, |e| e.0);
            }
            pressure_pa = s.pressure.eval(self.mesh, &self.pressure_pa, c, xi, 0).map(|e| e.0);
        }
        PointSample { cell: c, temperature: theta + self.state.t_offset, velocity, pressure_pa }
    }

    pub fn sample(&self, p: [f64; 2]) -> Result<PointSample> {
        let c = self.locator.find(self.mesh, [p[0], p[1], 0.0]).ok_or(Error::PointOutsideMesh { x: p[0], y: p[1] })?;
        Ok(self.sample_in(c, p))
    }

    /// `n` equally spaced samples from `start` to `end`, located by walking
    /// from the previous sample's cell.
    pub fn probe_line(&self, start: [f64; 2], end: [f64; 2], n: usize) -> Result<Vec<ProbeSample>> {
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: alloc::string::String::from("need at least one sample") });
        }
        let (dx, dy) = (end[0] - start[0], end[1] - start[1]);
        let len = sqrt(dx * dx + dy * dy);
        let mut out = Vec::with_capacity(n);
        let mut cell: Option<usize> = None;
        for i in 0..n {
            let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            let p = [start[0] + t * dx, start[1] + t * dy];
            let p3 = [p[0], p[1], 0.0];
            let found = cell
                .and_then(|c| walk(self.mesh, &self.topo, c, p3))
                .or_else(|| self.locator.find(self.mesh, p3))
                .ok_or(Error::PointOutsideMesh { x: p[0], y: p[1] })?;
            cell = Some(found);
            let v = self.sample_in(found, p);
            out.push(ProbeSample {
                s: t * len,
                x: p[0],
                y: p[1],
                temperature: v.temperature,
                speed: sqrt(v.velocity[0] * v.velocity[0] + v.velocity[1] * v.velocity[1]),
                pressure_mmhg: v.pressure_pa.map(|pa| self.to_mmhg(pa)),
            });
        }
        Ok(out)
    }

    /// Unit vector against gravity, `+y` without gravity.
    pub fn up(&self) -> [f64; 2] {
        let g = sqrt(self.gravity[0] * self.gravity[0] + self.gravity[1] * self.gravity[1]);
        if g > 0.0 {
            [-self.gravity[0] / g, -self.gravity[1] / g]
        } else {
            [0.0, 1.0]
        }
    }

    /// Velocity at wall-adjacent points; the samples are also stored.
    pub fn wall_pattern(&mut self, points: &[(Wall, [f64; 2])]) -> Result<WallPattern> {
        let up = self.up();
        let mut samples = Vec::with_capacity(points.len());
        for &(wall, point) in points {
            let v = self.sample(point)?;
            samples.push(WallSample { wall, point, velocity: v.velocity, upward: v.velocity[0] * up[0] + v.velocity[1] * up[1] });
        }
        self.wall_samples = samples.clone();
        Ok(WallPattern { samples })
    }

    /// Pressure span over the fluid nodes accepted by `select`.
    pub fn hydrostatic_span(&self, select: &dyn Fn([f64; 2]) -> bool) -> HydrostaticSpan {
        let sp = &self.spaces.pressure;
        let g = sqrt(self.gravity[0] * self.gravity[0] + self.gravity[1] * self.gravity[1]);
        let dir = if g > 0.0 { [self.gravity[0] / g, self.gravity[1] / g] } else { [0.0, 0.0] };
        let (mut plo, mut phi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut zlo, mut zhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for n in 0..sp.n_nodes() {
            let x = sp.node_coords()[n];
            if !select([x[0], x[1]]) {
                continue;
            }
            let v = self.pressure_pa[sp.dof(n, 0)];
            plo = plo.min(v);
            phi = phi.max(v);
            let z = dir[0] * x[0] + dir[1] * x[1];
            zlo = zlo.min(z);
            zhi = zhi.max(z);
        }
        if plo > phi {
            return HydrostaticSpan { span_pa: 0.0, span_mmhg: 0.0, extent_m: 0.0, rho_g_h_pa: 0.0, ratio: None };
        }
        let span_pa = phi - plo;
        let extent_m = zhi - zlo;
        let rho_g_h_pa = self.rho * g * extent_m;
        HydrostaticSpan {
            span_pa,
            span_mmhg: span_pa / PA_PER_MMHG,
            extent_m,
            rho_g_h_pa,
            ratio: if rho_g_h_pa > 0.0 { Some(span_pa / rho_g_h_pa) } else { None },
        }
    }

    /// Point data at the mesh vertices, or at all quadratic nodes on the
    /// once-refined mesh.
    pub fn visual_fields(&self, refined: bool) -> VisualFields {
        let mesh = self.mesh;
        let s = &self.spaces;
        let theta = self.state.theta();
        let u = self.state.u();
        let off = self.state.t_offset;
        let nv = mesh.n_vertices();
        let mut out = VisualFields {
            points: Vec::new(),
            triangles: Vec::new(),
            cell_region: Vec::new(),
            velocity: Vec::new(),
            pressure_mmhg: Vec::new(),
            temperature: Vec::new(),
        };
        let vel_at = |node: Option<usize>| -> [f64; 3] {
            node.map_or([0.0; 3], |n| [u[s.velocity.dof(n, 0)], u[s.velocity.dof(n, 1)], 0.0])
        };
        let p_vertex = |v: usize| s.pressure.vertex_node(v).map(|n| self.pressure_pa[s.pressure.dof(n, 0)]);
        for v in 0..nv {
            let tn = s.temperature.vertex_node(v).expect("temperature covers every vertex");
            out.points.push(mesh.vertex(v));
            out.temperature.push(theta[s.temperature.dof(tn, 0)] + off);
            out.velocity.push(vel_at(s.velocity.vertex_node(v)));
            out.pressure_mmhg.push(p_vertex(v).map_or(0.0, |pa| self.to_mmhg(pa)));
        }
        if !refined {
            for c in 0..mesh.n_cells() {
                let cell = mesh.cell(c);
                out.triangles.push([cell[0], cell[1], cell[2]]);
                out.cell_region.push(mesh.region(c));
            }
            return out;
        }
        let mut mid = alloc::collections::BTreeMap::new();
        for c in 0..mesh.n_cells() {
            let cell = mesh.cell(c);
            let mut m = [0usize; 3];
            for (k, &(a, b)) in [(cell[0], cell[1]), (cell[1], cell[2]), (cell[2], cell[0])].iter().enumerate() {
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let id = out.points.len();
                    let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
                    out.points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
                    let tn = s.temperature.edge_node(a, b).expect("temperature covers every edge");
                    out.temperature.push(theta[s.temperature.dof(tn, 0)] + off);
                    let vn = s.velocity.edge_node(a, b);
                    out.velocity.push(vel_at(vn));
                    let p = match (vn, p_vertex(a), p_vertex(b)) {
                        (Some(_), Some(x), Some(y)) => self.to_mmhg(0.5 * (x + y)),
                        _ => 0.0,
                    };
                    out.pressure_mmhg.push(p);
                    id
                });
            }
            let [a, b, cc] = [cell[0], cell[1], cell[2]];
            for t in [[a, m[0], m[2]], [m[0], b, m[1]], [m[2], m[1], cc], [m[0], m[1], m[2]]] {
                out.triangles.push(t);
                out.cell_region.push(mesh.region(c));
            }
        }
        out
    }
}

fn node_extremum(mesh: &Mesh, space: &FunctionSpace, node: usize, value: f64) -> NodeExtremum {
    let x = space.node_coords()[node];
    let mut tags = Vec::new();
    for f in 0..mesh.n_facets() {
        if space.facet_nodes(mesh.facet(f)).contains(&node) {
            tags.push(mesh.facet_tag(f));
        }
    }
    tags.sort_unstable();
    tags.dedup();
    let mut regions = Vec::new();
    for &c in space.cells() {
        if space.cell_nodes(c).is_some_and(|n| n.contains(&node)) {
            regions.push(mesh.region(c));
        }
    }
    regions.sort_unstable();
    regions.dedup();
    NodeExtremum { value, point: [x[0], x[1]], tags, regions }
}

/// Largest speed over the quadrature points of degree
/// [`SPEED_RULE_DEGREE`] in the cells of `space`.
pub fn max_speed(mesh: &Mesh, space: &FunctionSpace, u: &[f64]) -> Result<f64> {
    let rule = quadrature_rule(mesh.dim(), SPEED_RULE_DEGREE)?;
    let tab = Tabulation::new(mesh.dim(), space.degree(), &rule.points);
    let mut best = 0.0f64;
    for &c in space.cells() {
        let nodes = space.cell_nodes(c).expect("space cell");
        for q in 0..rule.len() {
            let phi = tab.values(q);
            let mut v = [0.0; 2];
            for (i, &n) in nodes.iter().enumerate() {
                v[0] += u[space.dof(n, 0)] * phi[i];
                v[1] += u[space.dof(n, 1)] * phi[i];
            }
            best = best.max(sqrt(v[0] * v[0] + v[1] * v[1]));
        }
    }
    Ok(best)
}

/// Solve `-Δψ = ω` with `ψ = 0` on `wall_nodes`, where `ω` is the vorticity
/// of the quadratic velocity `u`, and locate the vortices.
pub fn stream_function(mesh: &Mesh, space: &FunctionSpace, wall_nodes: &[usize], u: &[f64]) -> Result<StreamFunction> {
    if mesh.dim() != 2 {
        return Err(Error::Unsupported(alloc::string::String::from("stream function of a 3D field")));
    }
    let nn = space.n_nodes();
    let rule = quadrature_rule(2, 2 * space.degree())?;
    let tab = Tabulation::new(2, space.degree(), &rule.points);
    let mut trip = Vec::new();
    let mut rhs = alloc::vec![0.0; nn];
    for &c in space.cells() {
        let nodes = space.cell_nodes(c).expect("space cell");
        let map = CellMap::new(mesh, c);
        let det = map.abs_det();
        let mut local = alloc::vec![0.0; nodes.len() * nodes.len()];
        for q in 0..rule.len() {
            let w = rule.weights[q] * det;
            let g: Vec<[f64; 3]> = tab.grads(q).iter().map(|&r| map.grad(r)).collect();
            let mut omega = 0.0;
            for (i, &n) in nodes.iter().enumerate() {
                omega += u[space.dof(n, 1)] * g[i][0] - u[space.dof(n, 0)] * g[i][1];
            }
            let phi = tab.values(q);
            for i in 0..nodes.len() {
                rhs[nodes[i]] += w * omega * phi[i];
                for j in 0..nodes.len() {
                    local[i * nodes.len() + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        for i in 0..nodes.len() {
            for j in 0..nodes.len() {
                trip.push((nodes[i], nodes[j], local[i * nodes.len() + j]));
            }
        }
    }
    let mut k = CsrMatrix::from_triplets(nn, nn, &trip);
    let cons: Vec<(usize, f64)> = wall_nodes.iter().map(|&n| (n, 0.0)).collect();
    apply_dirichlet(&mut k, &mut rhs, &cons, true);
    let mut psi = alloc::vec![0.0; nn];
    if rhs.iter().any(|&v| v != 0.0) {
        EnvelopeLu::new(&k, ENVELOPE_MAX)?.solve(&rhs, &mut psi);
    }
    let vortices = find_vortices(space, &psi);
    Ok(StreamFunction { values: psi, vortices })
}

fn find_vortices(space: &FunctionSpace, psi: &[f64]) -> Vec<Vortex> {
    let max_abs = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Vec::new();
    }
    let mut adj: Vec<Vec<usize>> = alloc::vec![Vec::new(); psi.len()];
    for &c in space.cells() {
        let nodes = space.cell_nodes(c).expect("space cell");
        for &a in nodes {
            adj[a].extend(nodes.iter().copied().filter(|&b| b != a));
        }
    }
    let thr = RECIRCULATION_THRESHOLD * max_abs;
    let mut out = Vec::new();
    for (n, nbrs) in adj.iter().enumerate() {
        let v = psi[n];
        if nbrs.is_empty() || v.abs() < thr {
            continue;
        }
        let is_max = v > 0.0 && nbrs.iter().all(|&m| psi[m] < v);
        let is_min = v < 0.0 && nbrs.iter().all(|&m| psi[m] > v);
        if is_max || is_min {
            let x = space.node_coords()[n];
            out.push(Vortex { point: [x[0], x[1]], psi: v });
        }
    }
    out
}

/// Sample points a quarter of the gap away from the iris front and from
/// the inner cornea, at the mid-height of the iris in both halves of the
/// anterior chamber.
pub fn eye_wall_points(geom: &EyeGeometry) -> Result<Vec<(Wall, [f64; 2])>> {
    let lm = geom.landmarks()?;
    let r = lm.cornea_inner_radius;
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let y = sign * 0.5 * (lm.pupil_y + lm.wall_y);
        let xc = lm.cornea_center - sqrt(r * r - y * y);
        let gap = lm.iris_front - xc;
        out.push((Wall::Posterior, [lm.iris_front - 0.25 * gap, y]));
        out.push((Wall::Cornea, [xc + 0.25 * gap, y]));
    }
    Ok(out)
}

/// Whether a fluid point lies in the anterior chamber: not behind the
/// front face of the iris.
pub fn in_anterior_chamber(lm: &EyeLandmarks, p: [f64; 2]) -> bool {
    p[0] <= lm.iris_front
}

/// End points of the pupillary axis, posterior pole first, moved inward by
/// a twentieth of the element size so both lie inside the polygonal mesh.
pub fn eye_axis(geom: &EyeGeometry) -> Result<([f64; 2], [f64; 2])> {
    let lm = geom.landmarks()?;
    let inset = 0.05 * geom.h;
    Ok(([lm.posterior_pole - inset, 0.0], [lm.outer_apex + inset, 0.0]))
}
