use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::linsolve::{BlockLayout, CsrMatrix};
use crate::mesh::{rectangle, Mesh, SideTags};
use crate::testutil::box_eye;

fn params() -> PhysicalParams {
    PhysicalParams { k_solid: vec![(RegionTag::OuterShell, 0.58)], ..Default::default() }
}

fn solve_opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn gravity_by_posture() {
    assert_eq!(posture_gravity(Posture::Standing, 9.81), [0.0, -9.81]);
    assert_eq!(posture_gravity(Posture::Supine, 9.81), [9.81, 0.0]);
    assert_eq!(posture_gravity(Posture::Prone, 0.0), [-0.0, 0.0]);
    assert_eq!("prone".parse::<Posture>().unwrap(), Posture::Prone);
    assert!("sideways".parse::<Posture>().is_err());
}

#[test]
fn params_are_validated() {
    let mut p = params();
    p.mu = 0.0;
    assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "mu", .. })));
    let mut p = params();
    p.gravity_dir = [0.5, 0.5];
    assert!(p.validate().is_err());
    let mut p = params();
    p.g = 0.0;
    p.gravity_dir = [0.0, 0.0];
    assert!(p.validate().is_ok());
}

#[test]
fn thermal_equilibrium_has_zero_residual() {
    let mesh = box_eye(8);
    let mut p = params();
    p.t_amb = p.t_bl;
    p.e = 0.0;
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let prob = CoupledProblem::new(&mesh, p.clone(), &bcs, Forcing::default()).unwrap();
    let mut x = prob.zero_state();
    let n_t = prob.layout().n_t;
    x.set_temperature(&vec![p.t_ref; n_t]);
    let r = prob.residual(&x).unwrap();
    // Non-zero only through the buoyancy of T - T_ref and the Robin terms.
    assert!(crate::testutil::norm_inf(&r) > 0.0);
    x.set_temperature(&vec![p.t_bl; n_t]);
    let mut p0 = p.clone();
    p0.beta = 0.0;
    let prob0 = CoupledProblem::new(&mesh, p0, &bcs, Forcing::default()).unwrap();
    let r = prob0.residual(&x).unwrap();
    assert!(crate::testutil::norm_inf(&r) < 1e-12, "{:e}", crate::testutil::norm_inf(&r));
}

#[test]
fn single_robin_datum_gives_uniform_temperature() {
    let mesh = box_eye(6);
    let mut p = params();
    p.e = 0.0;
    p.h_amb = 0.0;
    p.h_r = 0.0;
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let prob = CoupledProblem::new(&mesh, p.clone(), &bcs, Forcing::default()).unwrap();
    let x = prob.initial_guess().unwrap();
    assert!(x.temperature().iter().all(|t| (t - p.t_bl).abs() < 1e-8));
}

#[test]
fn initial_guess_is_bounded() {
    let mesh = box_eye(8);
    let p = params();
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let prob = CoupledProblem::new(&mesh, p.clone(), &bcs, Forcing::default()).unwrap();
    let x = prob.initial_guess().unwrap();
    assert!(x.u().iter().all(|&v| v == 0.0) && x.p().iter().all(|&v| v == 0.0));
    let lo = p.t_amb.min(p.t_bl) - 1.0;
    let hi = p.t_amb.max(p.t_bl) + 1.0;
    assert!(x.temperature().iter().all(|t| (lo..=hi).contains(t)));
}

#[test]
fn zero_buoyancy_decouples() {
    let mesh = box_eye(8);
    let mut p = params();
    p.beta = 0.0;
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let mut prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let x0 = prob.initial_guess().unwrap();
    let sys = prob.jacobian(&x0).unwrap();
    assert!(sys.c_ut().values().iter().all(|&v| v == 0.0));
    let (x, rep) = prob.solve(Some(x0), &solve_opts()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations(), 1);
    assert!(crate::testutil::norm_inf(x.u()) <= 1e-12);
}

#[test]
fn scalar_newton_harness() {
    struct Sq;
    impl NonlinearSystem for Sq {
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0] * x[0] - 4.0])
        }
        fn linear_step(&self, x: &[f64], r: &[f64], _atol: f64) -> Result<LinearStep> {
            Ok(LinearStep { delta: vec![-r[0] / (2.0 * x[0])], iterations: 1, converged: true, reference_iterations: None })
        }
    }
    let ctl = NewtonControl { rtol: 0.0, atol: 1e-13, ..Default::default() };
    let (x, rep) = newton(&Sq, &[3.0], &ctl).unwrap();
    assert!(rep.converged && rep.iterations() <= 7);
    assert!((x[0] - 2.0).abs() < 1e-12);
}

fn solved_box(posture: Posture) -> (Mesh, PhysicalParams) {
    let mut p = params();
    p.set_posture(posture);
    (box_eye(8), p)
}

#[test]
fn jacobian_matches_finite_differences() {
    let (mesh, p) = solved_box(Posture::Standing);
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let mut x = prob.initial_guess().unwrap();
    // A smooth non-trivial velocity and pressure.
    let l = prob.layout();
    for i in 0..l.n() {
        if i < l.n_u + l.n_p {
            x.values[i] = 1e-4 * ((i as f64) * 0.7).sin();
        }
    }
    prob.project(&mut x.values);
    let dirs: Vec<Vec<f64>> = (0..5)
        .map(|s| {
            let raw: Vec<f64> = (0..l.n()).map(|i| ((i * (s + 3)) as f64 * 1.37).cos()).collect();
            prob.block_scaled_direction(&x, &raw)
        })
        .collect();
    for e in fd_check(&prob, &x, &dirs).unwrap() {
        assert!(e <= 1e-5, "{e:e}");
    }
}

#[test]
fn buoyant_solve_converges_quadratically() {
    let (mesh, p) = solved_box(Posture::Standing);
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let mut prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let (x, rep) = prob.solve(None, &solve_opts()).unwrap();
    assert!(rep.converged, "{rep}");
    assert!(rep.iterations() <= 15);
    let ratios = rep.quadratic_ratios(10.0 * NewtonControl::default().atol);
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    assert!(tail.iter().all(|&q| q < 1e3), "{ratios:?}");
    let umax = crate::testutil::norm_inf(x.u());
    assert!(umax > 0.0);
    // Discrete incompressibility against the pressure space.
}

#[test]
fn converged_velocity_is_discretely_divergence_free() {
    let mesh = box_eye(6);
    let mut p = params();
    p.t_amb = 300.0;
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let mut prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let mut opts = solve_opts();
    opts.linear.method = LinearMethod::Direct;
    opts.newton.rtol = 1e-14;
    opts.newton.atol = 0.0;
    opts.newton.max_iter = 6;
    let (x, _) = prob.solve(None, &opts).unwrap();
    let sys = prob.jacobian(&x).unwrap();
    let b = sys.b_pu();
    let bu = b.matvec(x.u());
    let abs_b = CsrMatrix::from_raw(
        b.nrows(),
        b.ncols(),
        b.row_ptr().to_vec(),
        b.col_idx().to_vec(),
        b.values().iter().map(|v| v.abs()).collect(),
    )
    .unwrap();
    let scale = abs_b.matvec(&x.u().iter().map(|v| v.abs()).collect::<Vec<_>>());
    assert!(crate::math::norm2(&bu) <= 1e-10 * crate::math::norm2(&scale));
}

#[test]
fn direct_and_gmres_agree() {
    let mesh = box_eye(4);
    let p = params();
    let bcs = eye_thermal_bcs(&p, AmbientReference::TAmb);
    let mut prob = CoupledProblem::new(&mesh, p, &bcs, Forcing::default()).unwrap();
    let (a, _) = prob.solve(None, &solve_opts()).unwrap();
    let mut opts = solve_opts();
    opts.linear.method = LinearMethod::Direct;
    let (b, rep) = prob.solve(None, &opts).unwrap();
    assert!(rep.converged);
    let d: f64 = a.u().iter().zip(b.u()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // Both meet the same residual target, which bounds the velocity only to
    // about 1e-6 relative at these scales.
    assert!(d <= 1e-4 * crate::testutil::norm_inf(a.u()), "{d:e}");
}

#[test]
fn rejects_missing_tag_and_fluid() {
    let mesh = box_eye(4);
    let p = params();
    let bcs = vec![(BoundaryTag::GammaI, ThermalBc::Robin { h: 1.0, t_ext: 300.0, flux: 0.0 })];
    assert_eq!(
        CoupledProblem::new(&mesh, p.clone(), &bcs, Forcing::default()).err(),
        Some(Error::UnknownTag(BoundaryTag::GammaI))
    );
    let solid = rectangle(2, 2, [0.0, 1.0], [0.0, 1.0], RegionTag::Lens, SideTags::uniform(BoundaryTag::GammaBody));
    assert_eq!(CoupledProblem::new(&solid, p, &[], Forcing::default()).err(), Some(Error::MissingFlowRegion));
}

#[test]
fn layout_counts() {
    let mesh = box_eye(4);
    let prob = CoupledProblem::new(&mesh, params(), &[], Forcing::default()).unwrap();
    let l: BlockLayout = prob.layout();
    assert_eq!(l.n_t, 81);
    assert_eq!(l.n_p, 9);
    assert_eq!(l.n_u, 2 * 25);
    let _: &CsrMatrix = &prob.jacobian(&prob.zero_state()).unwrap().matrix;
}
