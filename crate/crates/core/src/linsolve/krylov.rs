use alloc::vec::Vec;

use super::CsrMatrix;
use crate::math::{dot, norm2, sqrt};
use crate::{Error, Result};

/// Linear map `y = A x`.
pub trait LinearOperator {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

/// Approximate inverse action `z ≈ A⁻¹ r`. Implementations may be
/// nonlinear (inner iterations), which the flexible GMRES tolerates.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// The identity preconditioner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Wrap a closure as a preconditioner.
pub struct FnPreconditioner<F>(pub F);

impl<F: Fn(&[f64], &mut [f64])> Preconditioner for FnPreconditioner<F> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        (self.0)(r, z)
    }
}

/// Wrap a closure as an operator of the given size.
pub struct FnOperator<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Relative reduction of the residual norm.
    pub tol: f64,
    /// Absolute floor on the residual norm.
    pub atol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tol: 1e-8, atol: 0.0, max_iter: 500, restart: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each iteration (the Arnoldi estimate, replaced by
    /// the true residual at every restart).
    pub history: Vec<f64>,
    /// True residual norm at the start of each cycle and at the end.
    pub restart_residuals: Vec<f64>,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if b.abs() > a.abs() {
        let t = a / b;
        let s = 1.0 / sqrt(1.0 + t * t);
        (s * t, s)
    } else {
        let t = b / a;
        let c = 1.0 / sqrt(1.0 + t * t);
        (c, c * t)
    }
}

/// Restarted right-preconditioned GMRES in flexible form (the preconditioned
/// directions are stored), so the preconditioner may change between
/// iterations. The residual monitored is the true, unpreconditioned one.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    opts: &GmresOptions,
) -> Result<GmresResult> {
    let n = op.size();
    if b.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!("rhs {} vs operator {n}", b.len())));
    }
    let mut x = x0.map_or_else(|| alloc::vec![0.0; n], <[f64]>::to_vec);
    let m = opts.restart.max(1);
    let mut r = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64], w: &mut [f64]| {
        op.apply(x, w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        norm2(r)
    };
    let mut beta = residual(&x, &mut r, &mut w);
    if !beta.is_finite() {
        return Err(Error::NotFinite("gmres residual"));
    }
    let target = (opts.tol * beta).max(opts.atol);
    let mut history = Vec::new();
    let mut restart_residuals = alloc::vec![beta];
    let mut iterations = 0;
    if beta <= target || beta == 0.0 {
        return Ok(GmresResult { x, iterations, converged: true, history, restart_residuals });
    }
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut h = alloc::vec![0.0; (m + 1) * m];
    let mut cs = alloc::vec![0.0; m];
    let mut sn = alloc::vec![0.0; m];
    let mut g = alloc::vec![0.0; m + 1];
    loop {
        v.clear();
        z.clear();
        v.push(r.iter().map(|ri| ri / beta).collect());
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            let mut zk = alloc::vec![0.0; n];
            precond.apply(&v[k], &mut zk);
            op.apply(&zk, &mut w);
            // Modified Gram-Schmidt, twice for robustness.
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let hij = dot(&w, vj);
                    h[j * m + k] += hij;
                    for i in 0..n {
                        w[i] -= hij * vj[i];
                    }
                }
            }
            let hn = norm2(&w);
            if !hn.is_finite() {
                return Err(Error::NotFinite("gmres Arnoldi vector"));
            }
            h[(k + 1) * m + k] = hn;
            for j in 0..k {
                let (a, bb) = (h[j * m + k], h[(j + 1) * m + k]);
                h[j * m + k] = cs[j] * a + sn[j] * bb;
                h[(j + 1) * m + k] = -sn[j] * a + cs[j] * bb;
            }
            let (c, s) = givens(h[k * m + k], h[(k + 1) * m + k]);
            cs[k] = c;
            sn[k] = s;
            h[k * m + k] = c * h[k * m + k] + s * h[(k + 1) * m + k];
            h[(k + 1) * m + k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            let est = g[k + 1].abs();
            z.push(zk);
            iterations += 1;
            k += 1;
            history.push(est);
            let happy = hn <= 1e-14 * beta;
            if est <= target || happy {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = alloc::vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i * m + j] * y[j];
            }
            y[i] = s / h[i * m + i];
        }
        for (j, zj) in z.iter().enumerate() {
            for i in 0..n {
                x[i] += y[j] * zj[i];
            }
        }
        h.iter_mut().for_each(|hi| *hi = 0.0);
        beta = residual(&x, &mut r, &mut w);
        if !beta.is_finite() {
            return Err(Error::NotFinite("gmres residual"));
        }
        restart_residuals.push(beta);
        if let Some(last) = history.last_mut() {
            *last = beta;
        }
        let converged = beta <= target;
        if converged || iterations >= opts.max_iter || beta == 0.0 {
            return Ok(GmresResult { x, iterations, converged, history, restart_residuals });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// systems.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<CgResult> {
    let n = op.size();
    let mut x = x0.map_or_else(|| alloc::vec![0.0; n], <[f64]>::to_vec);
    let mut r = alloc::vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = norm2(&r);
    if r0 == 0.0 {
        return Ok(CgResult { x, iterations: 0, converged: true, residual: 0.0 });
    }
    let mut zv = alloc::vec![0.0; n];
    precond.apply(&r, &mut zv);
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut ap = alloc::vec![0.0; n];
    let mut res = r0;
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NotFinite("conjugate gradient"));
        }
        if pap <= 0.0 {
            return Err(Error::LinearSolve(alloc::string::String::from(
                "conjugate gradient met a non-positive curvature direction",
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm2(&r);
        if res <= tol * r0 {
            return Ok(CgResult { x, iterations: it, converged: true, residual: res });
        }
        precond.apply(&r, &mut zv);
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zv[i] + beta * p[i];
        }
    }
    Ok(CgResult { x, iterations: max_iter, converged: false, residual: res })
}
