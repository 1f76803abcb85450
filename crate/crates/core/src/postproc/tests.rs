use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::coupled::{eye_thermal_bcs, AmbientReference, Forcing, PhysicalParams, SolveOptions};
use crate::math::{cos, sin, PI};
use crate::mesh::{unit_square, SideTags};
use crate::testutil::box_eye;

fn fluid_square(n: usize) -> Mesh {
    unit_square(n, n, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaC))
}

fn box_params() -> PhysicalParams {
    PhysicalParams { k_solid: vec![(RegionTag::OuterShell, 0.58)], ..Default::default() }
}

#[test]
fn mmhg_conversion() {
    assert!((pressure_to_mmhg(133.322, 0.0) - 1.0).abs() < 1e-15);
    assert_eq!(pressure_to_mmhg(0.0, 15.5), 15.5);
    let column = 1000.0 * 9.81 * 0.006;
    assert!((pressure_to_mmhg(column, 0.0) - 0.4415).abs() < 1e-4);
}

#[test]
fn zero_fields_on_two_triangles() {
    let mesh = fluid_square(1);
    let mut p = box_params();
    p.g = 0.0;
    let prob = CoupledProblem::new(&mesh, p, &[], Forcing::default()).unwrap();
    let out = FieldOutput::new(&prob, prob.zero_state(), None, 0.0).unwrap();
    let v = out.visual_fields(false);
    assert_eq!(v.triangles.len(), 2);
    assert_eq!(v.points.len(), 4);
    assert!(v.temperature.iter().chain(&v.pressure_mmhg).all(|&x| x == 0.0));
    assert!(v.velocity.iter().all(|u| *u == [0.0; 3]));
    let r = out.visual_fields(true);
    assert_eq!(r.triangles.len(), 8);
    assert_eq!(r.points.len(), 9);
    assert_eq!(out.metrics.max_speed, 0.0);
    assert_eq!(out.metrics.recirculation, 0);
    assert!(out.stream.values.iter().all(|&x| x == 0.0));
}

#[test]
fn single_cell_stream_function() {
    let mesh = fluid_square(16);
    let s = Spaces::new(&mesh).unwrap();
    // u = (∂ψ/∂y, -∂ψ/∂x) for ψ = sin πx sin πy.
    let u = s.velocity.interpolate(|x| {
        let (sx, cx, sy, cy) = (sin(PI * x[0]), cos(PI * x[0]), sin(PI * x[1]), cos(PI * x[1]));
        [PI * sx * cy, -PI * cx * sy, 0.0]
    });
    let sf = stream_function(&mesh, &s.velocity, &s.wall_nodes, &u).unwrap();
    assert_eq!(sf.vortices.len(), 1);
    let v = sf.vortices[0];
    assert!(v.psi > 0.0);
    assert!((v.point[0] - 0.5).abs() < 1e-9 && (v.point[1] - 0.5).abs() < 1e-9);
    assert!((v.psi - 1.0).abs() < 1e-3, "{}", v.psi);

    let two = s.velocity.interpolate(|x| {
        let (s2, c2, sy, cy) = (sin(2.0 * PI * x[0]), cos(2.0 * PI * x[0]), sin(PI * x[1]), cos(PI * x[1]));
        [PI * s2 * cy, -2.0 * PI * c2 * sy, 0.0]
    });
    let sf = stream_function(&mesh, &s.velocity, &s.wall_nodes, &two).unwrap();
    assert_eq!(sf.vortices.len(), 2);
    assert!(sf.vortices[0].psi * sf.vortices[1].psi < 0.0);
}

#[test]
fn stream_function_rejects_3d() {
    let s = Spaces::new(&fluid_square(2)).unwrap();
    let cube = crate::mesh::Mesh::from_parts(
        3,
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![0, 1, 2, 3],
        vec![RegionTag::AqueousHumor],
        Vec::new(),
        Vec::new(),
    );
    if let Ok(cube) = cube {
        assert!(matches!(stream_function(&cube, &s.velocity, &[], &[]), Err(Error::Unsupported(_))));
    }
}

fn solved_box() -> (Mesh, PhysicalParams) {
    (box_eye(8), box_params())
}

#[test]
fn metrics_of_a_buoyant_solve() {
    let (mesh, p) = solved_box();
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let mut prob = CoupledProblem::new(&mesh, p.clone(), &bcs, Forcing::default()).unwrap();
    let (x, rep) = prob.solve(None, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let out = FieldOutput::new(&prob, x, Some(rep), DEFAULT_DISPLAY_OFFSET_MMHG).unwrap();
    let m = &out.metrics;

    // max |u| is the maximum over quadrature-point evaluations.
    let rule = quadrature_rule(2, SPEED_RULE_DEGREE).unwrap();
    let sv = &out.spaces.velocity;
    let mut best = 0.0f64;
    for &c in sv.cells() {
        for &xi in &rule.points {
            let a = sv.eval(&mesh, out.state.u(), c, xi, 0).unwrap().0;
            let b = sv.eval(&mesh, out.state.u(), c, xi, 1).unwrap().0;
            best = best.max(sqrt(a * a + b * b));
        }
    }
    assert!(m.max_speed > 0.0);
    assert!((m.max_speed - best).abs() <= 1e-12 * best);

    assert_eq!(m.p_max_mmhg, 15.5);
    assert!((m.p_min_mmhg - (15.5 + m.p_min_pa / PA_PER_MMHG)).abs() < 1e-12);
    assert!(m.t_min.value < m.t_max.value);
    assert!(m.t_min.tags.contains(&BoundaryTag::GammaAmb), "{:?}", m.t_min);
    assert!(m.energy.relative_imbalance() < 1e-6, "{:e}", m.energy.relative_imbalance());

    // Standing: the fluid column gives ρ g H over the 0.5 mm core.
    let span = out.hydrostatic_span(&|_| true);
    assert!((span.extent_m - 5e-4).abs() < 1e-15);
    assert!((span.ratio.unwrap() - 1.0).abs() < 0.05, "{:?}", span);
}

#[test]
fn probes_and_samples() {
    let (mesh, p) = solved_box();
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let x = prob.initial_guess().unwrap();
    let out = FieldOutput::new(&prob, x.clone(), None, 0.0).unwrap();
    let t = x.temperature();
    let st = &prob.spaces().temperature;
    // n = 1 at a vertex gives the vertex values.
    let v = 10;
    let pv = mesh.vertex(v);
    let probe = out.probe_line([pv[0], pv[1]], [0.0, 0.0], 1).unwrap();
    assert_eq!(probe.len(), 1);
    let tv = t[st.dof(st.vertex_node(v).unwrap(), 0)];
    assert!((probe[0].temperature - tv).abs() < 1e-12);
    assert_eq!(probe[0].s, 0.0);
    // A line through the solid and the fluid.
    let line = out.probe_line([1e-5, 5e-4], [9.9e-4, 5e-4], 50).unwrap();
    assert_eq!(line.len(), 50);
    assert!((line[49].s - 9.8e-4).abs() < 1e-15);
    assert!(line[0].pressure_mmhg.is_none() && line[25].pressure_mmhg.is_some());
    assert!(line.iter().all(|s| s.speed == 0.0));
    // The probe reproduces the interpolant of the heat solve at cell centroids.
    for c in [0, 17, 63] {
        let g = mesh.centroid(c);
        let s = out.sample([g[0], g[1]]).unwrap();
        let e = st.eval(&mesh, x.theta(), c, [1.0 / 3.0, 1.0 / 3.0, 0.0], 0).unwrap().0 + x.t_offset;
        assert!((s.temperature - e).abs() < 1e-12);
    }
    assert!(matches!(out.probe_line([2e-3, 0.0], [0.0, 0.0], 3), Err(Error::PointOutsideMesh { .. })));
    assert!(out.probe_line([0.0, 0.0], [1e-4, 0.0], 0).is_err());
}

#[test]
fn hydrostatic_span_vanishes_without_gravity() {
    let mesh = fluid_square(4);
    let mut p = box_params();
    p.g = 0.0;
    let prob = CoupledProblem::new(&mesh, p, &[], Forcing::default()).unwrap();
    let out = FieldOutput::new(&prob, prob.zero_state(), None, 15.5).unwrap();
    let span = out.hydrostatic_span(&|_| true);
    assert!(span.span_mmhg <= 1e-6);
    assert_eq!(span.ratio, None);
    assert_eq!(out.up(), [0.0, 1.0]);
}

#[test]
fn wall_pattern_signs() {
    let mesh = fluid_square(4);
    let prob = CoupledProblem::new(&mesh, box_params(), &[], Forcing::default()).unwrap();
    let mut x = prob.zero_state();
    let sv = &prob.spaces().velocity;
    // Clockwise cell: up on the right, down on the left.
    let u = sv.interpolate(|p| [0.0, p[0] - 0.5, 0.0]);
    x.values[..u.len()].copy_from_slice(&u);
    let mut out = FieldOutput::new(&prob, x, None, 0.0).unwrap();
    let pat = out.wall_pattern(&[(Wall::Posterior, [0.8, 0.5]), (Wall::Cornea, [0.2, 0.5])]).unwrap();
    assert!(pat.posterior_upward() && pat.cornea_downward());
    assert_eq!(out.wall_samples.len(), 2);
    let pat = out.wall_pattern(&[(Wall::Posterior, [0.2, 0.5])]).unwrap();
    assert!(!pat.posterior_upward());
    assert!(!pat.cornea_downward(), "no samples is not a pass");
}

#[test]
fn eye_wall_points_are_in_the_anterior_chamber() {
    let g = EyeGeometry::default();
    let lm = g.landmarks().unwrap();
    let pts = eye_wall_points(&g).unwrap();
    assert_eq!(pts.len(), 4);
    for (_, p) in pts {
        assert_eq!(g.region_at(&lm, p), RegionTag::AqueousHumor);
        assert!(in_anterior_chamber(&lm, p));
    }
}
