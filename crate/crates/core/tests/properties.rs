use eyeflow_core::assembly::{assemble_diffusion, assemble_mass, Coefficient};
use eyeflow_core::femspace::{build_dof_map, Rank, Support};
use eyeflow_core::linsolve::{gmres, rcm_ordering, CsrMatrix, EnvelopeLu, GmresOptions, Identity};
use eyeflow_core::mesh::{generate_eye_cross_section, rectangle, BoundaryTag, EyeGeometry, RegionTag, SideTags};
use eyeflow_core::postproc::{pressure_to_mmhg, PA_PER_MMHG};
use eyeflow_core::verification::richardson;
use proptest::prelude::*;

fn triplets(n: usize, m: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    proptest::collection::vec((0..n, 0..m, -10.0f64..10.0), 0..4 * (n + m))
}

/// Sparse, strictly diagonally dominant, nonsymmetric.
fn dominant(n: usize) -> impl Strategy<Value = CsrMatrix> {
    triplets(n, n).prop_map(move |t| {
        let mut t: Vec<_> = t.into_iter().filter(|e| e.0 != e.1).collect();
        let mut row_sum = vec![0.0; n];
        for &(i, _, v) in &t {
            row_sum[i] += f64::abs(v);
        }
        for (i, s) in row_sum.into_iter().enumerate() {
            t.push((i, i, s + 1.0));
        }
        CsrMatrix::from_triplets(n, n, &t)
    })
}

fn dense_sum(n: usize, m: usize, t: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut a = vec![0.0; n * m];
    for &(i, j, v) in t {
        a[i * m + j] += v;
    }
    a
}

fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x).iter().zip(b).map(|(ax, b)| (ax - b) * (ax - b)).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn csr_from_triplets_sums_duplicates((n, m, t) in (1usize..9, 1usize..9).prop_flat_map(|(n, m)| (Just(n), Just(m), triplets(n, m)))) {
        let a = CsrMatrix::from_triplets(n, m, &t);
        let want = dense_sum(n, m, &t);
        for (x, y) in a.to_dense().iter().zip(&want) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        for i in 0..n {
            prop_assert!(a.row(i).0.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn transpose_is_an_involution((n, m, t) in (1usize..9, 1usize..9).prop_flat_map(|(n, m)| (Just(n), Just(m), triplets(n, m))),
                                  seed in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let a = CsrMatrix::from_triplets(n, m, &t);
        let at = a.transpose();
        prop_assert_eq!((at.nrows(), at.ncols()), (m, n));
        prop_assert_eq!(at.transpose().to_dense(), a.to_dense());
        let x = &seed[..n];
        let y1 = a.matvec_transpose(x);
        let y2 = at.matvec(x);
        for (p, q) in y1.iter().zip(&y2) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn rcm_is_a_permutation(a in (1usize..40).prop_flat_map(dominant)) {
        let mut p = rcm_ordering(&a);
        prop_assert_eq!(p.len(), a.nrows());
        p.sort();
        prop_assert!(p.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn envelope_lu_solves_dominant_systems((a, b) in (1usize..40).prop_flat_map(|n| (dominant(n), proptest::collection::vec(-1.0f64..1.0, n)))) {
        let lu = EnvelopeLu::new(&a, 1 << 20).unwrap();
        let mut x = vec![0.0; b.len()];
        lu.solve(&b, &mut x);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(residual_norm(&a, &x, &b) <= 1e-10 * (1.0 + bn));
    }

    #[test]
    fn gmres_solves_dominant_systems((a, b) in (1usize..40).prop_flat_map(|n| (dominant(n), proptest::collection::vec(-1.0f64..1.0, n)))) {
        let opts = GmresOptions { tol: 1e-10, ..GmresOptions::default() };
        let r = gmres(&a, &b, None, &Identity, &opts).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.iterations <= b.len());
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(residual_norm(&a, &r.x, &b) <= 1e-9 * (bn + 1e-300));
    }

    #[test]
    fn richardson_recovers_limit_and_order(limit in -10.0f64..10.0, c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], p in 1.0f64..4.0) {
        let f = |h: f64| limit + c * h.powf(p);
        let (l, q) = richardson(f(1.0), f(0.5), f(0.25));
        prop_assert!((l - limit).abs() <= 1e-9 * (1.0 + limit.abs() + c.abs()));
        prop_assert!((q - p).abs() <= 1e-8);
    }

    #[test]
    fn mmhg_conversion_is_affine(pa in -1e5f64..1e5, offset in -50.0f64..50.0) {
        let mm = pressure_to_mmhg(pa, offset);
        prop_assert!(((mm - offset) * PA_PER_MMHG - pa).abs() <= 1e-9 * (1.0 + pa.abs()));
        prop_assert_eq!(pressure_to_mmhg(0.0, offset), offset);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_sums_to_area_and_stiffness_kills_constants(
        nx in 1usize..6, ny in 1usize..6, w in 0.1f64..3.0, h in 0.1f64..3.0,
        degree in 1usize..3, k in 0.01f64..10.0, jitter in proptest::collection::vec(-0.2f64..0.2, 98),
    ) {
        let sides = SideTags::uniform(BoundaryTag::GammaSc);
        let base = rectangle(nx, ny, [0.0, w], [0.0, h], RegionTag::AqueousHumor, sides);
        let boundary = base.outer_boundary_vertices();
        let (dx, dy) = (w / nx as f64, h / ny as f64);
        // Move interior vertices only, by less than a quarter cell.
        let mesh = base.perturbed(|i, _| {
            if boundary[i] { [0.0; 3] } else { [jitter[2 * i % 98] * dx, jitter[(2 * i + 1) % 98] * dy, 0.0] }
        });
        let area = w * h;
        prop_assert!((mesh.total_volume() - area).abs() <= 1e-12 * area);
        let space = build_dof_map(&mesh, Rank::Scalar, degree, Support::Whole).unwrap();
        let m = assemble_mass(&mesh, &space, &Coefficient::Uniform(1.0)).unwrap();
        let total: f64 = m.values().iter().sum();
        prop_assert!((total - area).abs() <= 1e-12 * area);
        let a = assemble_diffusion(&mesh, &space, &Coefficient::Uniform(k)).unwrap();
        let ones = vec![1.0; space.n_dofs()];
        let scale = a.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for r in a.matvec(&ones) {
            prop_assert!(r.abs() <= 1e-12 * scale);
        }
        prop_assert!(a.asymmetry() <= 1e-12 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn eye_outer_boundary_is_body_plus_ambient(h in 0.5e-3f64..1.0e-3, ac in 2.6e-3f64..3.2e-3) {
        let g = EyeGeometry { h, ac_depth: ac, ..EyeGeometry::default() };
        let mesh = generate_eye_cross_section(&g).unwrap();
        prop_assert!(mesh.validate().is_empty());
        let topo = mesh.topology();
        let perimeter: f64 = topo
            .boundary_faces()
            .map(|f| {
                let v = f.vertices(2);
                let (a, b) = (mesh.vertex(v[0]), mesh.vertex(v[1]));
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .sum();
        let outer = mesh.tag_measure(BoundaryTag::GammaBody) + mesh.tag_measure(BoundaryTag::GammaAmb);
        prop_assert!((outer - perimeter).abs() <= 1e-12 * perimeter);
        prop_assert!(mesh.tag_measure(BoundaryTag::GammaAmb) > 0.0);
        let area = g.analytic_area().unwrap();
        prop_assert!((mesh.total_volume() - area).abs() <= 0.02 * area);
        let fluid = mesh.region_volume(RegionTag::AqueousHumor);
        let parts: f64 = RegionTag::STANDARD.iter().map(|&r| mesh.region_volume(r)).sum();
        prop_assert!(fluid > 0.0);
        prop_assert!((parts - mesh.total_volume()).abs() <= 1e-12 * parts);
    }
}
