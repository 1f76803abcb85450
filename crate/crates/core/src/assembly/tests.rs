use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::femspace::{build_dof_map, Support};
use crate::linsolve::dense_solve;
use crate::mesh::{unit_square, SideTags};

fn reference_triangle() -> Mesh {
    Mesh::from_parts(
        2,
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        vec![0, 1, 2],
        vec![RegionTag::AqueousHumor],
        vec![0, 1],
        vec![BoundaryTag::GammaC],
    )
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn p1_mass_on_reference_triangle() {
    let m = reference_triangle();
    let s = build_dof_map(&m, Rank::Scalar, 1, Support::Whole).unwrap();
    let a = assemble_mass(&m, &s, &Coefficient::Uniform(1.0)).unwrap().to_dense();
    let want = [2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0];
    for (x, w) in a.iter().zip(want) {
        assert!(close(*x, w / 24.0, 1e-13), "{a:?}");
    }
}

#[test]
fn p1_diffusion_on_reference_triangle() {
    let m = reference_triangle();
    let s = build_dof_map(&m, Rank::Scalar, 1, Support::Whole).unwrap();
    let a = assemble_diffusion(&m, &s, &Coefficient::Uniform(1.0)).unwrap().to_dense();
    let want = [2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0];
    for (x, w) in a.iter().zip(want) {
        assert!(close(*x, w / 2.0, 1e-13), "{a:?}");
    }
}

#[test]
fn diffusion_rejects_non_positive_coefficient() {
    let m = reference_triangle();
    let s = build_dof_map(&m, Rank::Scalar, 1, Support::Whole).unwrap();
    let e = assemble_diffusion(&m, &s, &Coefficient::Uniform(0.0)).unwrap_err();
    assert!(matches!(e, Error::NonPositiveCoefficient { .. }));
    let e = assemble_diffusion(&m, &s, &Coefficient::PerRegion(vec![(RegionTag::Lens, 1.0)])).unwrap_err();
    assert_eq!(e, Error::MissingCoefficient(RegionTag::AqueousHumor));
}

#[test]
fn robin_edge_matrix() {
    let m = reference_triangle();
    let s = build_dof_map(&m, Rank::Scalar, 1, Support::Whole).unwrap();
    let (a, load) = apply_robin(&m, &s, BoundaryTag::GammaC, 10.0, 300.0, &|_| 0.0).unwrap();
    let d = a.to_dense();
    let h6 = 10.0 / 6.0;
    assert!(close(d[0], 2.0 * h6, 1e-13) && close(d[1], h6, 1e-13) && close(d[4], 2.0 * h6, 1e-13));
    assert!(d[8].abs() < 1e-15);
    assert!(close(load[0], 10.0 * 300.0 / 2.0, 1e-13) && close(load[1], 1500.0, 1e-13));
    assert_eq!(
        apply_robin(&m, &s, BoundaryTag::GammaAmb, 1.0, 0.0, &|_| 0.0).unwrap_err(),
        Error::UnknownTag(BoundaryTag::GammaAmb)
    );
}

#[test]
fn mass_sums_to_area_for_p2() {
    let m = unit_square(4, 3, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
    let s = build_dof_map(&m, Rank::Scalar, 2, Support::Whole).unwrap();
    let a = assemble_mass(&m, &s, &Coefficient::Uniform(2.0)).unwrap();
    let total: f64 = a.values().iter().sum();
    assert!(close(total, 2.0, 1e-12));
}

fn poisson_linear(degree: usize) {
    let m = unit_square(5, 4, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
    let s = build_dof_map(&m, Rank::Scalar, degree, Support::Whole).unwrap();
    let mut a = assemble_diffusion(&m, &s, &Coefficient::Uniform(1.0)).unwrap();
    let mut b = vec![0.0; s.n_dofs()];
    let bc = dirichlet_dofs(&m, &s, &[BoundaryTag::GammaSc], &|x| [x[0] + x[1], 0.0, 0.0]);
    let fixed = apply_dirichlet(&mut a, &mut b, &bc, true);
    assert_eq!(fixed.len(), bc.len());
    assert!(a.asymmetry() < 1e-14);
    let x = dense_solve(s.n_dofs(), &a.to_dense(), &b).unwrap();
    for (n, p) in s.node_coords().iter().enumerate() {
        assert!((x[s.dof(n, 0)] - p[0] - p[1]).abs() < 1e-12);
    }
}

#[test]
fn poisson_reproduces_linear_field() {
    poisson_linear(1);
    poisson_linear(2);
}

#[test]
fn convection_of_linear_field() {
    let m = unit_square(3, 3, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
    let su = build_dof_map(&m, Rank::Vector, 2, Support::Fluid).unwrap();
    let st = build_dof_map(&m, Rank::Scalar, 2, Support::Whole).unwrap();
    let u = su.interpolate(|_| [1.0, 0.0, 0.0]);
    let n = assemble_convection(&m, &st, &su, &u, &Coefficient::Uniform(3.0)).unwrap();
    let t = st.interpolate(|x| [x[0], 0.0, 0.0]);
    let nt;
    nt = n.matvec(&t);
    let ones = assemble_load(&m, &st, &|_| [3.0, 0.0, 0.0]).unwrap();
    for (a, b) in nt.iter().zip(&ones) {
        assert!((a - b).abs() < 1e-13);
    }
    let e = assemble_convection(&m, &st, &su, &u[1..], &Coefficient::Uniform(1.0)).unwrap_err();
    assert!(matches!(e, Error::DimensionMismatch(_)));
}

#[test]
fn stokes_pair_and_divergence() {
    let m = unit_square(3, 3, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
    let su = build_dof_map(&m, Rank::Vector, 2, Support::Fluid).unwrap();
    let sp = build_dof_map(&m, Rank::Scalar, 1, Support::Fluid).unwrap();
    let (a, b) = assemble_stokes_blocks(&m, &su, &sp, 1e-3).unwrap();
    assert_eq!(a.nrows(), su.n_dofs());
    assert!(a.asymmetry() < 1e-15);
    // Divergence-free field gives zero; u = (x, 0) gives the integral of psi.
    let u = su.interpolate(|x| [x[1] * x[1], x[0] * x[0], 0.0]);
    let mut bu;
    bu = b.matvec(&u);
    assert!(bu.iter().all(|v| v.abs() < 1e-14));
    let u = su.interpolate(|x| [x[0], 0.0, 0.0]);
    bu = b.matvec(&u);
    let total: f64 = bu.iter().sum();
    assert!(close(total, 1.0, 1e-13));
    let p1 = build_dof_map(&m, Rank::Vector, 1, Support::Fluid).unwrap();
    assert!(matches!(
        assemble_stokes_blocks(&m, &p1, &sp, 1.0).unwrap_err(),
        Error::UnstablePair { velocity: 1, pressure: 1 }
    ));
}

#[test]
fn buoyancy_vanishes_at_reference_temperature() {
    let m = unit_square(2, 2, RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
    let su = build_dof_map(&m, Rank::Vector, 2, Support::Fluid).unwrap();
    let st = build_dof_map(&m, Rank::Scalar, 2, Support::Whole).unwrap();
    let (c, off) = assemble_buoyancy(&m, &su, &st, 1000.0, 3e-4, 298.0, &[0.0, -9.81]).unwrap();
    let t = st.interpolate(|_| [298.0, 0.0, 0.0]);
    let mut ct;
    ct = c.matvec(&t);
    let r: Vec<f64> = ct.iter().zip(&off).map(|(a, b)| a + b).collect();
    assert!(r.iter().all(|v| v.abs() < 1e-9), "{:e}", crate::testutil::norm_inf(&r));
    // One degree warmer: net force is +rho beta g_y |Omega| upward.
    let t = st.interpolate(|_| [299.0, 0.0, 0.0]);
    ct = c.matvec(&t);
    let fy: f64 = (0..su.n_nodes()).map(|n| ct[su.dof(n, 1)] + off[su.dof(n, 1)]).sum();
    assert!(close(fy, 1000.0 * 3e-4 * 9.81, 1e-10));
    assert!(assemble_buoyancy(&m, &su, &st, 1.0, 1.0, 0.0, &[0.0]).is_err());
}

#[test]
fn dirichlet_identity_rows() {
    let mut a = CsrMatrix::from_dense(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    let mut b = vec![3.0, 3.0];
    apply_dirichlet(&mut a, &mut b, &[(0, 1.0)], false);
    assert_eq!(a.to_dense(), vec![1.0, 0.0, 1.0, 2.0]);
    let x = dense_solve(2, &a.to_dense(), &b).unwrap();
    assert!(close(x[0], 1.0, 1e-15) && close(x[1], 1.0, 1e-15));
}
