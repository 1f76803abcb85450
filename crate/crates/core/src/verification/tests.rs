use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::coupled::fd_check;

/// Strong residual of the exact fields by central differences.
fn fd_forcing(case: &MmsCase, x: [f64; 3]) -> ([f64; 2], f64) {
    let h = 1e-4;
    let at = |dx: f64, dy: f64| [x[0] + dx, x[1] + dy, 0.0];
    let u = |dx, dy| (case.velocity)(at(dx, dy));
    let p = |dx, dy| (case.pressure)(at(dx, dy));
    let t = |dx, dy| (case.temperature)(at(dx, dy));
    let pr = &case.params;
    let g = pr.gravity();
    let u0 = u(0.0, 0.0);
    let mut f = [0.0; 2];
    for k in 0..2 {
        let dx = (u(h, 0.0)[k] - u(-h, 0.0)[k]) / (2.0 * h);
        let dy = (u(0.0, h)[k] - u(0.0, -h)[k]) / (2.0 * h);
        let lap = (u(h, 0.0)[k] + u(-h, 0.0)[k] + u(0.0, h)[k] + u(0.0, -h)[k] - 4.0 * u0[k]) / (h * h);
        let gp = if k == 0 { (p(h, 0.0) - p(-h, 0.0)) / (2.0 * h) } else { (p(0.0, h) - p(0.0, -h)) / (2.0 * h) };
        f[k] = pr.rho * (u0[0] * dx + u0[1] * dy) - pr.mu * lap + gp + pr.rho * pr.beta * (t(0.0, 0.0) - pr.t_ref) * g[k];
    }
    let tx = (t(h, 0.0) - t(-h, 0.0)) / (2.0 * h);
    let ty = (t(0.0, h) - t(0.0, -h)) / (2.0 * h);
    let tlap = (t(h, 0.0) + t(-h, 0.0) + t(0.0, h) + t(0.0, -h) - 4.0 * t(0.0, 0.0)) / (h * h);
    let q = pr.rho * pr.cp * (u0[0] * tx + u0[1] * ty) - pr.k_ah * tlap;
    (f, q)
}

#[test]
fn manufactured_forcing_matches_the_equations() {
    let case = MmsCase::coupled();
    for &x in &[[0.3, 0.7, 0.0], [0.11, 0.42, 0.0], [0.9, 0.05, 0.0], [0.5, 0.5, 0.0]] {
        let (f, q) = fd_forcing(&case, x);
        let fm = (case.forcing.momentum.as_ref().unwrap())(x);
        let qm = (case.forcing.heat.as_ref().unwrap())(x);
        for k in 0..2 {
            assert!((f[k] - fm[k]).abs() < 1e-5 * (1.0 + fm[k].abs()), "{k}: {} vs {}", f[k], fm[k]);
        }
        assert!((q - qm).abs() < 1e-5 * (1.0 + qm.abs()));
        // Divergence-free velocity.
        let h = 1e-5;
        let u = |dx: f64, dy: f64| (case.velocity)([x[0] + dx, x[1] + dy, 0.0]);
        let div = (u(h, 0.0)[0] - u(-h, 0.0)[0] + u(0.0, h)[1] - u(0.0, -h)[1]) / (2.0 * h);
        assert!(div.abs() < 1e-8);
    }
}

#[test]
fn zero_fields_give_zero_errors() {
    let t = run_mms(&MmsCase::zero(), &[2, 4, 8]).unwrap();
    for l in &t.levels {
        assert_eq!(l.errors, FieldErrors { u: 0.0, p: 0.0, t: 0.0 });
    }
}

#[test]
fn interpolation_errors_converge() {
    let case = MmsCase::coupled();
    let e: Vec<FieldErrors> = [4, 8, 16].iter().map(|&n| interpolation_errors(&case, &fluid_unit_square(n)).unwrap()).collect();
    for w in e.windows(2) {
        assert!(libm::log2(w[0].u / w[1].u) > 2.8);
        assert!(libm::log2(w[0].p / w[1].p) > 1.8);
        assert!(libm::log2(w[0].t / w[1].t) > 2.8);
    }
}

#[test]
fn coarse_mms_orders() {
    let t = run_mms(&MmsCase::coupled(), &[4, 8, 16]).unwrap();
    let o = t.final_orders().unwrap();
    assert!(o.u > 2.5 && o.p > 1.5 && o.t > 2.5, "{t}");
    assert!(t.levels.iter().all(|l| l.newton_iterations <= 8));
    let text = alloc::format!("{t}");
    assert!(text.contains("err_u") && text.lines().count() == 5);
}

#[test]
fn too_few_levels_are_rejected() {
    assert!(matches!(run_mms(&MmsCase::coupled(), &[4, 8]), Err(Error::InvalidParameter { .. })));
}

#[test]
fn jacobian_check_on_mms_levels() {
    let case = MmsCase::coupled();
    for n in [2, 4] {
        let mesh = fluid_unit_square(n);
        let problem = case.problem(&mesh).unwrap();
        let x = case.interpolate(&problem);
        let l = problem.layout();
        let dirs: Vec<Vec<f64>> =
            (0..3).map(|s| (0..l.n()).map(|i| libm::sin(1.3 * i as f64 + s as f64)).collect()).collect();
        for e in fd_check(&problem, &x, &dirs).unwrap() {
            assert!(e <= 1e-5, "n = {n}: {e:e}");
        }
    }
}

#[test]
fn orders_survive_vertex_jitter() {
    let case = MmsCase::coupled();
    let levels = [8usize, 16, 32];
    let pt = run_mms(&case, &levels).unwrap();
    let plain = pt.final_orders().unwrap();
    let meshes: Vec<(f64, Mesh)> = levels
        .iter()
        .map(|&n| {
            let m = fluid_unit_square(n);
            let h = 1.0 / n as f64;
            let jit = m.perturbed(|i, x| {
                if x[0] <= 0.0 || x[0] >= 1.0 || x[1] <= 0.0 || x[1] >= 1.0 {
                    return [0.0; 3];
                }
                let a = libm::sin(12.9898 * i as f64) * 43758.5453;
                let b = libm::sin(78.233 * i as f64) * 12345.678;
                let (ra, rb) = (a - libm::floor(a) - 0.5, b - libm::floor(b) - 0.5);
                [0.02 * h * ra, 0.02 * h * rb, 0.0]
            });
            (h, jit)
        })
        .collect();
    let jt = run_mms_on(&case, &meshes).unwrap();
    let jittered = jt.final_orders().unwrap();
    assert!((plain.u - jittered.u).abs() < 0.2, "{pt}{jt}");
    assert!((plain.p - jittered.p).abs() < 0.2, "{pt}{jt}");
    assert!((plain.t - jittered.t).abs() < 0.2);
}

#[test]
fn conduction_limit_has_unit_nusselt() {
    let l = cavity_level(0.0, 0.71, 4).unwrap();
    assert!((l.nu_hot - 1.0).abs() < 1e-10, "{l:?}");
    assert!((l.nu_cold - 1.0).abs() < 1e-10);
    assert!(l.max_speed < 1e-12);
}

#[test]
fn coarse_cavity_balances_energy() {
    let l = cavity_level(1e3, 0.71, 8).unwrap();
    assert!(l.nu_hot > 1.05 && l.nu_hot < 1.2, "{l:?}");
    assert!((l.nu_hot - l.nu_cold).abs() <= 1e-6 * l.nu_hot, "{l:?}");
}

#[test]
fn richardson_recovers_quadratic_limit() {
    let f = |h: f64| 1.0 + 3.0 * h * h;
    let (r, p) = richardson(f(0.25), f(0.125), f(0.0625));
    assert!((r - 1.0).abs() < 1e-12);
    assert!((p - 2.0).abs() < 1e-12);
    assert_eq!(richardson(1.0, 1.0, 1.0).0, 1.0);
    assert!(run_cavity_benchmark(1e3, 0.71, &[4, 8]).is_err());
    assert!(run_cavity_benchmark(1e3, 0.71, &[4, 8, 12]).is_err());
}

#[test]
fn unit_params_validate() {
    assert!(unit_params().validate().is_ok());
    assert!(cavity_params(1e3, 0.71).validate().is_ok());
    let _ = vec![0u8];
}
