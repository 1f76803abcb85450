use alloc::vec;
use alloc::vec::Vec;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use super::*;
use crate::Error;

fn dense_residual(n: usize, a: &[f64], x: &[f64], b: &[f64]) -> f64 {
    (0..n)
        .map(|i| {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            (ax - b[i]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn gmres_identity_one_iteration() {
    let a = CsrMatrix::identity(7);
    let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.0).collect();
    let r = gmres(&a, &b, None, &Identity, &GmresOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 1);
    for (x, y) in r.x.iter().zip(&b) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn gmres_two_by_two() {
    let a = CsrMatrix::from_dense(2, 2, &[4.0, 1.0, 1.0, 3.0]);
    let r = gmres(&a, &[1.0, 2.0], None, &Identity, &GmresOptions { tol: 1e-14, ..Default::default() }).unwrap();
    let direct = dense_solve(2, &[4.0, 1.0, 1.0, 3.0], &[1.0, 2.0]).unwrap();
    assert!((r.x[0] - 1.0 / 11.0).abs() < 1e-13 && (r.x[1] - 7.0 / 11.0).abs() < 1e-13);
    assert!((direct[0] - 1.0 / 11.0).abs() < 1e-15 && (direct[1] - 7.0 / 11.0).abs() < 1e-15);
}

fn random_dominant(n: usize, seed: u64) -> CsrMatrix {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j && (i as isize - j as isize).abs() <= 3 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
                off += 2.0 * v.abs();
            }
        }
        t.push((i, i, off + rng.gen_range(0.5..50.0)));
    }
    CsrMatrix::from_triplets(n, n, &t)
}

#[test]
fn ilu_reduces_iterations() {
    let a = random_dominant(50, 7);
    let b = vec![1.0; 50];
    let opts = GmresOptions { tol: 1e-10, ..Default::default() };
    let plain = gmres(&a, &b, None, &Identity, &opts).unwrap();
    let ilu = Ilu0::new(&a).unwrap();
    let pre = gmres(&a, &b, None, &ilu, &opts).unwrap();
    assert!(plain.converged && pre.converged);
    assert!(pre.iterations < plain.iterations, "{} vs {}", pre.iterations, plain.iterations);
}

#[test]
fn ilu_of_diagonal_is_exact() {
    let a = CsrMatrix::from_triplets(4, 4, &[(0, 0, 2.0), (1, 1, -3.0), (2, 2, 5.0), (3, 3, 0.5)]);
    let ilu = Ilu0::new(&a).unwrap();
    let r = gmres(&a, &[1.0, 2.0, 3.0, 4.0], None, &ilu, &GmresOptions::default()).unwrap();
    assert_eq!(r.iterations, 1);
}

#[test]
fn ilu_of_tridiagonal_is_a_direct_solve() {
    let n = 30;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.5));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &t);
    let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let mut z = vec![0.0; n];
    Ilu0::new(&a).unwrap().solve(&b, &mut z);
    let x = dense_solve(n, &a.to_dense(), &b).unwrap();
    for i in 0..n {
        assert!((z[i] - x[i]).abs() < 1e-12);
    }
}

#[test]
fn ilu_zero_pivot() {
    let a = CsrMatrix::from_dense(2, 2, &[0.0, 1.0, 1.0, 1.0]);
    assert_eq!(Ilu0::new(&a).unwrap_err(), Error::ZeroPivot { row: 0 });
}

#[test]
fn dense_identity_and_hilbert() {
    let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(dense_solve(3, &id, &[3.0, -1.0, 2.0]).unwrap(), vec![3.0, -1.0, 2.0]);
    let h: Vec<f64> = (0..16).map(|k| 1.0 / ((k / 4 + k % 4 + 1) as f64)).collect();
    let inv = [
        [16.0, -120.0, 240.0, -140.0],
        [-120.0, 1200.0, -2700.0, 1680.0],
        [240.0, -2700.0, 6480.0, -4200.0],
        [-140.0, 1680.0, -4200.0, 2800.0],
    ];
    let lu = DenseLu::new(4, &h).unwrap();
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..4 {
            assert!((col[i] - inv[i][j]).abs() < 1e-8, "({i},{j})");
        }
    }
    assert!(dense_residual(4, &h, &lu.solve(&[1.0; 4]), &[1.0; 4]) < 1e-10);
}

#[test]
fn dense_rejects_singular_and_large() {
    assert_eq!(dense_solve(2, &[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0]).unwrap_err(), Error::Singular);
    assert!(matches!(
        DenseLu::with_cap(3, &[0.0; 9], 2),
        Err(Error::TooLarge { n: 3, cap: 2 })
    ));
}

#[test]
fn cg_matches_direct() {
    let a = random_dominant(40, 3);
    let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
    let r = conjugate_gradient(&a, &b, None, &Ilu0::new(&a).unwrap(), 1e-12, 200).unwrap();
    let x = dense_solve(40, &a.to_dense(), &b).unwrap();
    assert!(r.converged);
    for i in 0..40 {
        assert!((r.x[i] - x[i]).abs() < 1e-9 * x[i].abs().max(1.0));
    }
}

#[test]
fn schwarz_is_a_usable_preconditioner() {
    let a = random_dominant(60, 11);
    let b = vec![1.0; 60];
    let asm = TwoDomainSchwarz::new(&a, 2).unwrap();
    let opts = GmresOptions { tol: 1e-10, ..Default::default() };
    let r = gmres(&a, &b, None, &asm, &opts).unwrap();
    let plain = gmres(&a, &b, None, &Identity, &opts).unwrap();
    assert!(r.converged && r.iterations < plain.iterations);
}

/// Small saddle-point system with a one-way buoyancy-like coupling.
fn toy_system() -> (BlockSystem, Vec<f64>) {
    let (nu, np, nt) = (6, 2, 3);
    let layout = BlockLayout { n_u: nu, n_p: np, n_t: nt, lagrange: false };
    let mut rng = SmallRng::seed_from_u64(5);
    let n = layout.n();
    let mut a = vec![0.0; n * n];
    for i in 0..nu {
        for j in 0..nu {
            a[i * n + j] = if i == j { 8.0 } else { rng.gen_range(-1.0..1.0) };
        }
    }
    for i in 0..np {
        for j in 0..nu {
            let v = rng.gen_range(-1.0..1.0);
            a[(nu + i) * n + j] = v;
            a[j * n + nu + i] = v;
        }
    }
    for i in 0..nu {
        for j in 0..nt {
            a[i * n + nu + np + j] = rng.gen_range(-1.0..1.0);
        }
    }
    for i in 0..nt {
        for j in 0..nt {
            a[(nu + np + i) * n + nu + np + j] = if i == j { 5.0 } else { rng.gen_range(-0.5..0.5) };
        }
    }
    let m = CsrMatrix::from_dense(n, n, &a);
    // Exact Schur complement -B A⁻¹ Bᵀ.
    let aa: Vec<f64> = (0..nu * nu).map(|k| a[(k / nu) * n + k % nu]).collect();
    let lu = DenseLu::new(nu, &aa).unwrap();
    let mut s = vec![0.0; np * np];
    for j in 0..np {
        let col: Vec<f64> = (0..nu).map(|i| a[i * n + nu + j]).collect();
        let y = lu.solve(&col);
        for i in 0..np {
            s[i * np + j] = -(0..nu).map(|k| a[(nu + i) * n + k] * y[k]).sum::<f64>();
        }
    }
    (BlockSystem::new(m, layout).unwrap(), s)
}

#[test]
fn exact_block_preconditioner_converges_in_three() {
    let (sys, s) = toy_system();
    let opts = BlockOptions { sub: SubSolver::Exact, ..Default::default() };
    let pre = BlockPreconditioner::new(&sys, SchurApproximation::Dense(s), &opts).unwrap();
    let b: Vec<f64> = (0..sys.layout.n()).map(|i| 1.0 + i as f64).collect();
    let r = gmres(&sys.matrix, &b, None, &pre, &GmresOptions { tol: 1e-12, ..Default::default() }).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 3, "{}", r.iterations);
}

#[test]
fn block_preconditioner_is_linear_at_zero() {
    let (sys, s) = toy_system();
    let pre = BlockPreconditioner::new(&sys, SchurApproximation::Dense(s), &BlockOptions::default()).unwrap();
    let n = sys.layout.n();
    let mut z = vec![1.0; n];
    pre.apply(&vec![0.0; n], &mut z);
    assert!(z.iter().all(|&v| v == 0.0));
}

fn grid_laplacian(m: usize, shuffle: u64) -> CsrMatrix {
    let n = m * m;
    let mut label: Vec<usize> = (0..n).collect();
    let mut rng = SmallRng::seed_from_u64(shuffle);
    for i in (1..n).rev() {
        label.swap(i, rng.gen_range(0..=i));
    }
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let a = label[i * m + j];
            t.push((a, a, 4.1));
            if i + 1 < m {
                let b = label[(i + 1) * m + j];
                t.push((a, b, -1.0));
                t.push((b, a, -1.2));
            }
            if j + 1 < m {
                let b = label[i * m + j + 1];
                t.push((a, b, -1.0));
                t.push((b, a, -0.9));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

#[test]
fn rcm_is_a_permutation_with_small_bandwidth() {
    let a = grid_laplacian(20, 3);
    let p = rcm_ordering(&a);
    let mut seen = vec![false; p.len()];
    for &i in &p {
        assert!(!seen[i]);
        seen[i] = true;
    }
    let mut inv = vec![0; p.len()];
    for (k, &o) in p.iter().enumerate() {
        inv[o] = k;
    }
    let mut bw = 0usize;
    for i in 0..a.nrows() {
        for &j in a.row(i).0 {
            bw = bw.max(inv[i].abs_diff(inv[j]));
        }
    }
    assert!(bw <= 25, "bandwidth {bw}");
}

#[test]
fn envelope_lu_matches_dense_solve() {
    for seed in 0..3 {
        let a = grid_laplacian(9, seed);
        let n = a.nrows();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let lu = EnvelopeLu::new(&a, usize::MAX).unwrap();
        let mut x = vec![0.0; n];
        lu.solve(&b, &mut x);
        let d = dense_solve(n, &a.to_dense(), &b).unwrap();
        for (u, v) in x.iter().zip(&d) {
            assert!((u - v).abs() < 1e-12);
        }
    }
    let a = random_dominant(40, 7);
    let b = vec![1.0; 40];
    let mut x = vec![0.0; 40];
    EnvelopeLu::new(&a, usize::MAX).unwrap().solve(&b, &mut x);
    assert!(dense_residual(40, &a.to_dense(), &x, &b) < 1e-12);
}

#[test]
fn envelope_lu_reports_limits() {
    let a = grid_laplacian(10, 1);
    assert!(matches!(EnvelopeLu::new(&a, 10), Err(Error::TooLarge { .. })));
    let z = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0)]);
    assert!(matches!(EnvelopeLu::new(&z, usize::MAX), Err(Error::ZeroPivot { row: 1 })));
}
