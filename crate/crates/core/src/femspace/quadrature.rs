use alloc::vec::Vec;

use crate::math::{cos, sqrt, PI};
use crate::{Error, Result};

/// Quadrature on the reference simplex (vertices at the origin and the unit
/// points). Points are reference coordinates; `z = 0` in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Symmetric triangle orbits: `(multiplicity-defining barycentrics, weight)`.
/// Weights are normalized to sum to 1 and scaled by the area afterwards.
fn triangle(degree: usize) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::new();
    let mut s3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        out.push(([a, a, b], w));
        out.push(([a, b, a], w));
        out.push(([b, a, a], w));
    };
    match degree {
        1 => return alloc::vec![([1.0 / 3.0; 3], 1.0)],
        2 => s3(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            s3(0.445_948_490_915_964_886, 0.223_381_589_678_011_466);
            s3(0.091_576_213_509_770_743, 0.109_951_743_655_321_868);
        }
        5 => {
            let r15 = sqrt(15.0);
            s3((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0);
            s3((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0);
            out.push(([1.0 / 3.0; 3], 0.225));
        }
        _ => {
            s3(0.249_286_745_170_910_421, 0.116_786_275_726_379_366);
            s3(0.063_089_014_491_502_228, 0.050_844_906_370_206_817);
            let (a, b) = (0.310_352_451_033_784_405, 0.053_145_049_844_816_947);
            let c = 1.0 - a - b;
            for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                out.push((p, 0.082_851_075_618_373_575));
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Rule exact for polynomials of total degree `degree` (1 to 6).
pub fn quadrature_rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    if !(1..=6).contains(&degree) || !(dim == 2 || dim == 3) {
        return Err(Error::UnsupportedQuadrature { dim, degree });
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for (l, w) in triangle(degree) {
            points.push([l[1], l[2], 0.0]);
            weights.push(0.5 * w);
        }
    } else {
        // Collapsed tensor Gauss rule; the Duffy Jacobian adds two degrees in
        // the first direction and one in the second.
        let n = (degree + 3).div_ceil(2);
        let g = gauss_legendre(n);
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                for &(w, ww) in &g {
                    let x = u;
                    let y = v * (1.0 - u);
                    let z = w * (1.0 - u) * (1.0 - v);
                    points.push([x, y, z]);
                    weights.push(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
    }
    Ok(QuadratureRule { dim, degree, points, weights })
}

/// Gauss rule on a facet parametrized by `t` in [0, 1] (2D meshes).
pub fn edge_rule(degree: usize) -> Vec<(f64, f64)> {
    gauss_legendre(degree.div_ceil(2).max(1))
}
