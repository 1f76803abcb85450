//! Parametric 2D cross-section of the eye.
//!
//! The section is cut along the optical axis: `x` runs from the cornea
//! (negative) to the back of the globe (positive) and `y` is vertical when
//! the subject stands. Lengths are in meters. The default dimensions are
//! textbook-magnitude placeholders, not measured data.
//!
//! Construction, anterior to posterior:
//! * globe: circle of radius `globe_radius` at the origin, with an inner
//!   circle `globe_radius - shell_thickness` bounding the vitreous;
//! * cornea: shell between an outer circle bulging `cornea_bulge` past the
//!   globe and an inner circle `cornea_thickness` smaller, closed laterally
//!   by radial segments at the limbus;
//! * chambers: the fluid region between the inner corneal surface, the
//!   horizontal walls `y = ±chamber_height/2`, the lens front and the
//!   vertical line through the lens equator; the iris is a rectangle
//!   attached to the walls, leaving the pupil open;
//! * lens: ellipse whose front apex sits `ac_depth` behind the inner
//!   corneal apex.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::delaunay::{conforming_delaunay, Pslg, PslgSegment};
use super::{BoundaryTag, Mesh, RegionTag};
use crate::math::{atan2, ceil, cos, sin, sqrt, PI};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EyeGeometry {
    pub globe_radius: f64,
    pub shell_thickness: f64,
    /// Radius of curvature of the outer corneal surface.
    pub cornea_radius: f64,
    /// How far the corneal apex protrudes past the globe circle.
    pub cornea_bulge: f64,
    pub cornea_thickness: f64,
    /// Vertical extent of the chambers.
    pub chamber_height: f64,
    /// Inner corneal apex to lens front apex.
    pub ac_depth: f64,
    /// Axial gap between the back of the iris and the lens apex plane.
    pub pc_gap: f64,
    pub iris_thickness: f64,
    pub pupil_aperture: f64,
    pub lens_half_thickness: f64,
    pub lens_half_height: f64,
    /// Arc length of sclera next to the limbus exposed to air.
    pub ambient_strip: f64,
    /// Target element size away from the fluid.
    pub h: f64,
    /// Element size in the fluid as a fraction of `h`.
    pub fluid_size_ratio: f64,
}

impl Default for EyeGeometry {
    fn default() -> Self {
        EyeGeometry {
            globe_radius: 12.0e-3,
            shell_thickness: 1.0e-3,
            cornea_radius: 7.8e-3,
            cornea_bulge: 0.6e-3,
            cornea_thickness: 0.55e-3,
            chamber_height: 6.0e-3,
            ac_depth: 3.0e-3,
            pc_gap: 0.3e-3,
            iris_thickness: 0.4e-3,
            pupil_aperture: 3.0e-3,
            lens_half_thickness: 2.0e-3,
            lens_half_height: 2.6e-3,
            ambient_strip: 2.0e-3,
            h: 0.4e-3,
            fluid_size_ratio: 0.5,
        }
    }
}

/// Derived positions of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeLandmarks {
    /// x of the corneal circles' common center.
    pub cornea_center: f64,
    pub cornea_inner_radius: f64,
    pub outer_apex: f64,
    pub inner_apex: f64,
    /// Upper limbus, where the outer corneal circle meets the globe.
    pub limbus: [f64; 2],
    /// Upper end of the corneal closure on the inner corneal circle.
    pub closure: [f64; 2],
    /// Half height of the chambers.
    pub wall_y: f64,
    /// x where the upper chamber wall meets the inner corneal circle.
    pub wall_cornea_x: f64,
    pub lens_apex: f64,
    pub lens_center: f64,
    pub iris_front: f64,
    pub iris_back: f64,
    pub pupil_y: f64,
    /// Upper end of the vitreous front line on the inner globe circle.
    pub vitreous_corner: [f64; 2],
    pub posterior_pole: f64,
}

impl EyeLandmarks {
    /// Axial extent of the eye, anterior to posterior.
    pub fn axial_extent(&self) -> (f64, f64) {
        (self.outer_apex, self.posterior_pole)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateGeometry(format!("{name} must be positive, got {v}")))
    }
}

fn degenerate(msg: String) -> Error {
    Error::DegenerateGeometry(msg)
}

impl EyeGeometry {
    pub fn fluid_h(&self) -> f64 {
        self.h * self.fluid_size_ratio
    }

    pub fn landmarks(&self) -> Result<EyeLandmarks> {
        let g = self;
        for (name, v) in [
            ("globe_radius", g.globe_radius),
            ("shell_thickness", g.shell_thickness),
            ("cornea_radius", g.cornea_radius),
            ("cornea_bulge", g.cornea_bulge),
            ("cornea_thickness", g.cornea_thickness),
            ("chamber_height", g.chamber_height),
            ("ac_depth", g.ac_depth),
            ("pc_gap", g.pc_gap),
            ("iris_thickness", g.iris_thickness),
            ("pupil_aperture", g.pupil_aperture),
            ("lens_half_thickness", g.lens_half_thickness),
            ("lens_half_height", g.lens_half_height),
            ("ambient_strip", g.ambient_strip),
            ("h", g.h),
            ("fluid_size_ratio", g.fluid_size_ratio),
        ] {
            positive(name, v)?;
        }
        let r_g = g.globe_radius;
        let r_c = g.cornea_radius;
        let r_in = r_c - g.cornea_thickness;
        if r_in <= 0.0 {
            return Err(degenerate(String::from("cornea thicker than its radius")));
        }
        if g.shell_thickness >= r_g {
            return Err(degenerate(String::from("shell thicker than the globe radius")));
        }
        let outer_apex = -(r_g + g.cornea_bulge);
        let c = outer_apex + r_c;
        // Circle intersection with the globe.
        let xl = (r_c * r_c - r_g * r_g - c * c) / (-2.0 * c);
        let yl2 = r_g * r_g - xl * xl;
        if c >= 0.0 || yl2 <= 0.0 || r_c >= r_g + c.abs() {
            return Err(degenerate(String::from("cornea does not intersect the globe")));
        }
        let limbus = [xl, sqrt(yl2)];
        // Radial closure from the limbus toward the origin ends on the inner circle.
        let (a2, b1, c0) = (r_g * r_g, 2.0 * (limbus[0] * -c), c * c - r_in * r_in);
        let disc = b1 * b1 - 4.0 * a2 * c0;
        if disc <= 0.0 {
            return Err(degenerate(String::from("corneal closure misses the inner surface")));
        }
        let s = (-b1 + sqrt(disc)) / (2.0 * a2);
        let closure = [s * limbus[0], s * limbus[1]];
        let wall_y = 0.5 * g.chamber_height;
        if wall_y >= closure[1] || wall_y >= r_in {
            return Err(degenerate(String::from("chamber taller than the cornea")));
        }
        let wall_cornea_x = c - sqrt(r_in * r_in - wall_y * wall_y);
        let inner_apex = c - r_in;
        let lens_apex = inner_apex + g.ac_depth;
        let lens_center = lens_apex + g.lens_half_thickness;
        let iris_back = lens_apex - g.pc_gap;
        let iris_front = iris_back - g.iris_thickness;
        let pupil_y = 0.5 * g.pupil_aperture;
        if iris_front <= wall_cornea_x {
            return Err(degenerate(String::from("iris intersects the cornea")));
        }
        if pupil_y >= wall_y {
            return Err(degenerate(String::from("pupil wider than the chamber")));
        }
        if g.lens_half_height >= wall_y {
            return Err(degenerate(String::from("lens taller than the chamber")));
        }
        if pupil_y < g.lens_half_height {
            let t = pupil_y / g.lens_half_height;
            let lens_x = lens_center - g.lens_half_thickness * sqrt(1.0 - t * t);
            if iris_back >= lens_x {
                return Err(degenerate(String::from("iris touches the lens")));
            }
        }
        let r_v = r_g - g.shell_thickness;
        let yv2 = r_v * r_v - lens_center * lens_center;
        if lens_center >= 0.0 || yv2 <= wall_y * wall_y {
            return Err(degenerate(String::from("lens equator outside the vitreous cavity")));
        }
        let limbus_angle = atan2(limbus[1], -limbus[0]);
        if limbus_angle + g.ambient_strip / r_g >= PI {
            return Err(degenerate(String::from("ambient strip wraps the globe")));
        }
        Ok(EyeLandmarks {
            cornea_center: c,
            cornea_inner_radius: r_in,
            outer_apex,
            inner_apex,
            limbus,
            closure,
            wall_y,
            wall_cornea_x,
            lens_apex,
            lens_center,
            iris_front,
            iris_back,
            pupil_y,
            vitreous_corner: [lens_center, sqrt(yv2)],
            posterior_pole: r_g,
        })
    }

    /// Exact area of the section: union of the globe and corneal disks.
    pub fn analytic_area(&self) -> Result<f64> {
        let lm = self.landmarks()?;
        let (r1, r2, d) = (self.globe_radius, self.cornea_radius, lm.cornea_center.abs());
        let a1 = r1 * r1 * libm::acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1));
        let a2 = r2 * r2 * libm::acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2));
        let k = 0.5 * sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2));
        Ok(PI * (r1 * r1 + r2 * r2) - (a1 + a2 - k))
    }

    /// Region containing the point, from the analytic construction.
    pub fn region_at(&self, lm: &EyeLandmarks, p: [f64; 2]) -> RegionTag {
        let [x, y] = p;
        let ay = y.abs();
        let dxc = x - lm.cornea_center;
        let inside_inner = dxc * dxc + y * y < lm.cornea_inner_radius * lm.cornea_inner_radius;
        let el = {
            let u = (x - lm.lens_center) / self.lens_half_thickness;
            let v = y / self.lens_half_height;
            u * u + v * v < 1.0
        };
        if ay < lm.wall_y && x < lm.lens_center && inside_inner {
            if el {
                return RegionTag::Lens;
            }
            if x >= lm.iris_front && x <= lm.iris_back && ay >= lm.pupil_y {
                return RegionTag::Iris;
            }
            return RegionTag::AqueousHumor;
        }
        if el {
            return RegionTag::Lens;
        }
        let closure_angle = atan2(lm.closure[1], -lm.closure[0]);
        if !inside_inner && atan2(ay, -x) < closure_angle {
            return RegionTag::Cornea;
        }
        let r_v = self.globe_radius - self.shell_thickness;
        if x >= lm.lens_center && x * x + y * y < r_v * r_v {
            return RegionTag::Vitreous;
        }
        RegionTag::OuterShell
    }

    fn size_at(&self, lm: &EyeLandmarks, p: [f64; 2]) -> f64 {
        let hf = self.fluid_h();
        let dx = (lm.inner_apex - p[0]).max(p[0] - lm.lens_center).max(0.0);
        let dy = (p[1].abs() - lm.wall_y).max(0.0);
        let d = sqrt(dx * dx + dy * dy);
        (hf + 0.3 * d).min(self.h)
    }
}

const UNTAGGED: u32 = 0;

fn marker(tag: BoundaryTag) -> u32 {
    1 + BoundaryTag::ALL.iter().position(|&t| t == tag).unwrap_or(0) as u32
}

fn tag_of(marker: u32) -> Option<BoundaryTag> {
    if marker == UNTAGGED {
        None
    } else {
        BoundaryTag::ALL.get(marker as usize - 1).copied()
    }
}

struct Builder<'a> {
    pslg: Pslg,
    size: &'a dyn Fn([f64; 2]) -> f64,
}

impl Builder<'_> {
    fn point(&mut self, p: [f64; 2]) -> usize {
        self.pslg.points.push(p);
        self.pslg.points.len() - 1
    }

    /// Discretize the curve `f(t)`, `t` in [0, 1], between two existing points.
    fn curve(&mut self, a: usize, b: usize, m: u32, f: &dyn Fn(f64) -> [f64; 2]) {
        const SAMPLES: usize = 64;
        let mut len = 0.0;
        let mut hmin = f64::INFINITY;
        let mut prev = f(0.0);
        for i in 1..=SAMPLES {
            let q = f(i as f64 / SAMPLES as f64);
            len += sqrt((q[0] - prev[0]) * (q[0] - prev[0]) + (q[1] - prev[1]) * (q[1] - prev[1]));
            hmin = hmin.min((self.size)(q));
            prev = q;
        }
        let n = (ceil(len / hmin) as usize).max(1);
        let mut last = a;
        for i in 1..n {
            let id = self.point(f(i as f64 / n as f64));
            self.pslg.segments.push(PslgSegment { a: last, b: id, marker: m });
            last = id;
        }
        self.pslg.segments.push(PslgSegment { a: last, b, marker: m });
    }

    fn line(&mut self, a: usize, b: usize, m: u32) {
        let (pa, pb) = (self.pslg.points[a], self.pslg.points[b]);
        self.curve(a, b, m, &|t| [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
    }

    /// Arc of the circle `center + r(-cos φ, sin φ)` from `φ0` to `φ1`.
    fn arc(&mut self, a: usize, b: usize, m: u32, center: f64, r: f64, phi0: f64, phi1: f64) {
        self.curve(a, b, m, &|t| {
            let phi = phi0 + t * (phi1 - phi0);
            [center - r * cos(phi), r * sin(phi)]
        });
    }
}

/// Generate the tagged triangle mesh of the cross-section.
pub fn generate_eye_cross_section(geom: &EyeGeometry) -> Result<Mesh> {
    let lm = geom.landmarks()?;
    let size = |p: [f64; 2]| geom.size_at(&lm, p);
    let mut bld = Builder { pslg: Pslg::default(), size: &size };

    let r_g = geom.globe_radius;
    let r_v = r_g - geom.shell_thickness;
    let (c, r_c, r_in) = (lm.cornea_center, geom.cornea_radius, lm.cornea_inner_radius);
    let angle = |center: f64, p: [f64; 2]| atan2(p[1], -(p[0] - center));
    let flip = |p: [f64; 2]| [p[0], -p[1]];
    let amb = marker(BoundaryTag::GammaAmb);
    let body = marker(BoundaryTag::GammaBody);
    let gc = marker(BoundaryTag::GammaC);
    let gi = marker(BoundaryTag::GammaI);
    let gl = marker(BoundaryTag::GammaL);
    let gvh = marker(BoundaryTag::GammaVH);
    let gsc = marker(BoundaryTag::GammaSc);

    // Outer boundary: corneal arc, ambient strips and the body side of the globe.
    let lu = bld.point(lm.limbus);
    let ll = bld.point(flip(lm.limbus));
    let phi_l_cornea = angle(c, lm.limbus);
    bld.arc(lu, ll, amb, c, r_c, phi_l_cornea, -phi_l_cornea);
    let phi_l = angle(0.0, lm.limbus);
    let phi_s = phi_l + geom.ambient_strip / r_g;
    let su = bld.point([-r_g * cos(phi_s), r_g * sin(phi_s)]);
    let sl = bld.point([-r_g * cos(phi_s), -r_g * sin(phi_s)]);
    bld.arc(lu, su, amb, 0.0, r_g, phi_l, phi_s);
    bld.arc(su, sl, body, 0.0, r_g, phi_s, 2.0 * PI - phi_s);
    bld.arc(sl, ll, amb, 0.0, r_g, 2.0 * PI - phi_s, 2.0 * PI - phi_l);

    // Inner corneal surface and the lateral closures.
    let ku = bld.point(lm.closure);
    let kl = bld.point(flip(lm.closure));
    bld.line(lu, ku, UNTAGGED);
    bld.line(ll, kl, UNTAGGED);
    let wc_u = bld.point([lm.wall_cornea_x, lm.wall_y]);
    let wc_l = bld.point([lm.wall_cornea_x, -lm.wall_y]);
    let phi_k = angle(c, lm.closure);
    let phi_w = angle(c, [lm.wall_cornea_x, lm.wall_y]);
    bld.arc(ku, wc_u, UNTAGGED, c, r_in, phi_k, phi_w);
    bld.arc(wc_u, wc_l, gc, c, r_in, phi_w, -phi_w);
    bld.arc(wc_l, kl, UNTAGGED, c, r_in, -phi_w, -phi_k);

    // Lens ellipse, front half wetted by the fluid.
    let (a_l, b_l) = (geom.lens_half_thickness, geom.lens_half_height);
    let xl = lm.lens_center;
    let eu = bld.point([xl, b_l]);
    let el = bld.point([xl, -b_l]);
    let ellipse = move |th: f64| [xl - a_l * cos(th), b_l * sin(th)];
    bld.curve(eu, el, gl, &|t| ellipse(PI / 2.0 - t * PI));
    bld.curve(el, eu, UNTAGGED, &|t| ellipse(-PI / 2.0 - t * PI));

    let mut corners = Vec::new();
    for sign in [1.0, -1.0] {
        let p = |x: f64, y: f64| [x, sign * y];
        let wc = if sign > 0.0 { wc_u } else { wc_l };
        let e = if sign > 0.0 { eu } else { el };
        let f = bld.point(p(lm.iris_front, lm.wall_y));
        let ft = bld.point(p(lm.iris_front, lm.pupil_y));
        let bt = bld.point(p(lm.iris_back, lm.pupil_y));
        let b = bld.point(p(lm.iris_back, lm.wall_y));
        let v = bld.point(p(xl, lm.wall_y));
        let w = bld.point(p(lm.vitreous_corner[0], lm.vitreous_corner[1]));
        bld.line(wc, f, gsc);
        bld.line(f, ft, gi);
        bld.line(ft, bt, gi);
        bld.line(bt, b, gi);
        bld.line(f, b, UNTAGGED);
        bld.line(b, v, gsc);
        bld.line(e, v, gvh);
        bld.line(v, w, UNTAGGED);
        corners.push(w);
    }
    // Vitreous cavity wall behind the lens equator plane.
    let phi_v = angle(0.0, lm.vitreous_corner);
    let (wu, wl) = (corners[0], corners[1]);
    bld.arc(wu, wl, UNTAGGED, 0.0, r_v, phi_v, 2.0 * PI - phi_v);

    let max_points = 2_000_000;
    let tri = conforming_delaunay(&bld.pslg, &size, max_points)?;
    build_mesh(geom, &lm, tri)
}

fn build_mesh(geom: &EyeGeometry, lm: &EyeLandmarks, tri: super::Triangulation) -> Result<Mesh> {
    let n_tri = tri.triangles.len();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let constrained: BTreeMap<(usize, usize), u32> =
        tri.segments.iter().map(|s| (key(s.a, s.b), s.marker)).collect();

    // Components of triangles connected across unconstrained edges.
    let mut parent: Vec<usize> = (0..n_tri).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut edge_owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, v) in tri.triangles.iter().enumerate() {
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            let k = key(a, b);
            if constrained.contains_key(&k) {
                continue;
            }
            if let Some(&o) = edge_owner.get(&k) {
                let (ra, rb) = (find(&mut parent, o), find(&mut parent, t));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            } else {
                edge_owner.insert(k, t);
            }
        }
    }
    let area = |v: &[usize; 3]| {
        let [a, b, c] = v.map(|i| tri.points[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    };
    // Area-weighted vote of the analytic predicate per component.
    let mut votes: BTreeMap<usize, BTreeMap<RegionTag, f64>> = BTreeMap::new();
    for (t, v) in tri.triangles.iter().enumerate() {
        let [a, b, c] = v.map(|i| tri.points[i]);
        let cen = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let r = geom.region_at(lm, cen);
        let root = find(&mut parent, t);
        *votes.entry(root).or_default().entry(r).or_insert(0.0) += area(v);
    }
    let mut component_region: BTreeMap<usize, RegionTag> = BTreeMap::new();
    for (root, tally) in &votes {
        let total: f64 = tally.values().sum();
        let (best, w) = tally
            .iter()
            .fold((RegionTag::OuterShell, -1.0), |acc, (&r, &w)| if w > acc.1 { (r, w) } else { acc });
        if w < 0.95 * total {
            return Err(Error::MesherFailure(format!(
                "component classified inconsistently ({:.1}% {best})",
                100.0 * w / total
            )));
        }
        component_region.insert(*root, best);
    }

    let vertices: Vec<[f64; 3]> = tri.points.iter().map(|p| [p[0], p[1], 0.0]).collect();
    let mut cells = Vec::with_capacity(3 * n_tri);
    let mut regions = Vec::with_capacity(n_tri);
    for (t, v) in tri.triangles.iter().enumerate() {
        cells.extend_from_slice(v);
        let root = find(&mut parent, t);
        regions.push(component_region[&root]);
    }
    let mut facets = Vec::new();
    let mut tags = Vec::new();
    let mut pieces: Vec<&PslgSegment> = tri.segments.iter().collect();
    pieces.sort_by_key(|s| (s.marker, key(s.a, s.b)));
    for s in pieces {
        if let Some(tag) = tag_of(s.marker) {
            facets.extend_from_slice(&[s.a, s.b]);
            tags.push(tag);
        }
    }
    let mesh = Mesh::from_parts(2, vertices, cells, regions, facets, tags)?;
    let violations = mesh.validate();
    if let Some(v) = violations.first() {
        return Err(Error::MesherFailure(format!("{} violation(s), first: {v}", violations.len())));
    }
    for r in RegionTag::STANDARD {
        if !mesh.has_region(r) {
            return Err(Error::MesherFailure(format!("region {r} is empty")));
        }
    }
    Ok(mesh)
}
