//! Conforming Delaunay triangulation with size-driven refinement.
//!
//! Input is a planar straight-line graph (points and segments). Segments are
//! recovered by midpoint splitting until every segment is an unencroached
//! Delaunay edge; triangles are then refined by circumcenter insertion
//! (Ruppert style) until they meet the local size and radius-edge bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PslgSegment {
    pub a: usize,
    pub b: usize,
    /// Caller-defined curve id, preserved through splits.
    pub marker: u32,
}

#[derive(Debug, Clone, Default)]
pub struct Pslg {
    pub points: Vec<[f64; 2]>,
    pub segments: Vec<PslgSegment>,
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise triangles inside the domain.
    pub triangles: Vec<[usize; 3]>,
    /// Input segments after splitting, in output point indices.
    pub segments: Vec<PslgSegment>,
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    nb: [usize; 3],
    alive: bool,
    inside: bool,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

struct Delaunay {
    pts: Vec<[f64; 2]>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    last: usize,
    stamp: Vec<u32>,
    epoch: u32,
    dup_tol2: f64,
}

impl Delaunay {
    fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        let d = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        let pts = alloc::vec![
            [cx - 20.0 * d, cy - 10.0 * d],
            [cx + 20.0 * d, cy - 10.0 * d],
            [cx, cy + 20.0 * d],
        ];
        let tris = alloc::vec![Tri { v: [0, 1, 2], nb: [NONE; 3], alive: true, inside: false }];
        Delaunay {
            pts,
            tris,
            free: Vec::new(),
            last: 0,
            stamp: alloc::vec![0],
            epoch: 0,
            dup_tol2: (1e-12 * d) * (1e-12 * d),
        }
    }

    fn locate(&self, p: [f64; 2]) -> usize {
        let mut t = if self.tris[self.last].alive { self.last } else { self.first_alive() };
        let limit = 4 * self.tris.len() + 64;
        'walk: for _ in 0..limit {
            let tri = &self.tris[t];
            for i in 0..3 {
                let a = self.pts[tri.v[(i + 1) % 3]];
                let b = self.pts[tri.v[(i + 2) % 3]];
                if orient(a, b, p) < 0.0 && tri.nb[i] != NONE {
                    t = tri.nb[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // Walk did not settle; fall back to a scan.
        (0..self.tris.len())
            .find(|&t| {
                let tri = &self.tris[t];
                tri.alive
                    && (0..3).all(|i| {
                        orient(self.pts[tri.v[(i + 1) % 3]], self.pts[tri.v[(i + 2) % 3]], p) >= 0.0
                    })
            })
            .unwrap_or(t)
    }

    fn first_alive(&self) -> usize {
        self.tris.iter().position(|t| t.alive).unwrap_or(0)
    }

    fn in_circle_of(&self, t: usize, p: [f64; 2]) -> bool {
        let v = self.tris[t].v;
        incircle(self.pts[v[0]], self.pts[v[1]], self.pts[v[2]], p) > 0.0
    }

    fn alloc_tri(&mut self, tri: Tri) -> usize {
        if let Some(i) = self.free.pop() {
            self.tris[i] = tri;
            i
        } else {
            self.tris.push(tri);
            self.stamp.push(0);
            self.tris.len() - 1
        }
    }

    /// Insert `p` and return its vertex index (an existing index when `p`
    /// coincides with a vertex).
    fn insert(&mut self, p: [f64; 2]) -> usize {
        let t0 = self.locate(p);
        for &v in &self.tris[t0].v {
            if dist2(self.pts[v], p) <= self.dup_tol2 {
                return v;
            }
        }
        let inside_flag = self.tris[t0].inside;
        self.epoch = self.epoch.wrapping_add(1);
        let epoch = self.epoch;
        let mut cavity = alloc::vec![t0];
        self.stamp[t0] = epoch;
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..3 {
                let n = self.tris[t].nb[i];
                if n != NONE && self.stamp[n] != epoch && self.in_circle_of(n, p) {
                    self.stamp[n] = epoch;
                    cavity.push(n);
                }
            }
        }
        let pi = self.pts.len();
        self.pts.push(p);

        let mut boundary: Vec<(usize, usize, usize, usize)> = Vec::new();
        for &t in &cavity {
            let tri = self.tris[t];
            for i in 0..3 {
                let n = tri.nb[i];
                if n == NONE || self.stamp[n] != epoch {
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], n, t));
                }
            }
        }
        for &t in &cavity {
            self.tris[t].alive = false;
            self.free.push(t);
        }
        let mut created: Vec<(usize, usize)> = Vec::with_capacity(boundary.len());
        for &(a, b, outer, _) in &boundary {
            let nt = self.alloc_tri(Tri {
                v: [a, b, pi],
                nb: [NONE, NONE, outer],
                alive: true,
                inside: inside_flag,
            });
            self.stamp[nt] = 0;
            if outer != NONE {
                let o = &mut self.tris[outer];
                for j in 0..3 {
                    let (x, y) = (o.v[(j + 1) % 3], o.v[(j + 2) % 3]);
                    if (x == b && y == a) || (x == a && y == b) {
                        o.nb[j] = nt;
                    }
                }
            }
            created.push((a, nt));
        }
        created.sort_unstable();
        for idx in 0..created.len() {
            let nt = created[idx].1;
            let [_, b, _] = self.tris[nt].v;
            // Edge b->p of this triangle is shared with the triangle starting at b.
            let j = created.binary_search_by(|e| e.0.cmp(&b)).expect("closed cavity");
            let other = created[j].1;
            self.tris[nt].nb[0] = other;
            self.tris[other].nb[1] = nt;
        }
        self.last = created.first().map(|c| c.1).unwrap_or(self.last);
        pi
    }

    fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<(usize, usize)>> {
        let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            for i in 0..3 {
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                map.entry((a.min(b), a.max(b))).or_default().push((t, tri.v[i]));
            }
        }
        map
    }

    /// Mark triangles not reachable from the super triangle without crossing
    /// a segment as inside.
    fn label(&mut self, segs: &[PslgSegment]) {
        let constrained: BTreeSet<(usize, usize)> =
            segs.iter().map(|s| (s.a.min(s.b), s.a.max(s.b))).collect();
        let mut outside = alloc::vec![false; self.tris.len()];
        let mut stack: Vec<usize> = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if tri.alive && tri.v.iter().any(|&v| v < 3) {
                outside[t] = true;
                stack.push(t);
            }
        }
        while let Some(t) = stack.pop() {
            let tri = self.tris[t];
            for i in 0..3 {
                let n = tri.nb[i];
                if n == NONE || outside[n] {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if constrained.contains(&(a.min(b), a.max(b))) {
                    continue;
                }
                outside[n] = true;
                stack.push(n);
            }
        }
        for (t, tri) in self.tris.iter_mut().enumerate() {
            tri.inside = tri.alive && !outside[t];
        }
    }
}

/// Build a conforming Delaunay triangulation of `pslg` refined to the size
/// field `size` (target edge length as a function of position).
pub fn conforming_delaunay(
    pslg: &Pslg,
    size: &dyn Fn([f64; 2]) -> f64,
    max_points: usize,
) -> Result<Triangulation> {
    if pslg.points.len() < 3 {
        return Err(Error::MesherFailure(format!("only {} input points", pslg.points.len())));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &pslg.points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut dt = Delaunay::new(lo, hi);
    let map: Vec<usize> = pslg.points.iter().map(|&p| dt.insert(p)).collect();
    let mut segs: Vec<PslgSegment> = pslg
        .segments
        .iter()
        .map(|s| PslgSegment { a: map[s.a], b: map[s.b], marker: s.marker })
        .collect();
    if let Some(s) = segs.iter().find(|s| s.a == s.b) {
        return Err(Error::MesherFailure(format!("zero-length segment with marker {}", s.marker)));
    }

    let min_len = |p: [f64; 2]| 0.02 * size(p);
    recover_segments(&mut dt, &mut segs, &min_len, max_points)?;

    const QUALITY: f64 = 1.414;
    const SIZE_RATIO: f64 = 0.62;
    for _round in 0..200 {
        dt.label(&segs);
        let mut bad: Vec<(usize, [usize; 3])> = Vec::new();
        for (t, tri) in dt.tris.iter().enumerate() {
            if !tri.alive || !tri.inside {
                continue;
            }
            let [a, b, c] = tri.v.map(|v| dt.pts[v]);
            let cc = circumcenter(a, b, c);
            let r = sqrt(dist2(cc, a));
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            let h = size(centroid);
            let shortest = sqrt(dist2(a, b).min(dist2(b, c)).min(dist2(c, a)));
            if r > SIZE_RATIO * h || (r > QUALITY * shortest && shortest > 0.15 * h) {
                bad.push((t, tri.v));
            }
        }
        if bad.is_empty() {
            let tri = finish(&dt, segs);
            return Ok(tri);
        }
        for (t, verts) in bad {
            let tri = dt.tris[t];
            if !tri.alive || tri.v != verts {
                continue;
            }
            let [a, b, c] = verts.map(|v| dt.pts[v]);
            let cc = circumcenter(a, b, c);
            let mut split_any = false;
            let mut i = 0;
            let n_segs = segs.len();
            while i < n_segs {
                let s = segs[i];
                let (pa, pb) = (dt.pts[s.a], dt.pts[s.b]);
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                let len2 = dist2(pa, pb);
                if dist2(cc, mid) < 0.25 * len2 && sqrt(len2) > min_len(mid) {
                    let m = dt.insert(mid);
                    segs[i] = PslgSegment { a: s.a, b: m, marker: s.marker };
                    segs.push(PslgSegment { a: m, b: s.b, marker: s.marker });
                    split_any = true;
                }
                i += 1;
            }
            if !split_any {
                let host = dt.locate(cc);
                if dt.tris[host].alive && dt.tris[host].inside {
                    dt.insert(cc);
                }
            }
            if dt.pts.len() > max_points {
                return Err(Error::MesherFailure(format!(
                    "point budget of {max_points} exceeded during refinement"
                )));
            }
        }
        recover_segments(&mut dt, &mut segs, &min_len, max_points)?;
    }
    Err(Error::MesherFailure(format!("refinement did not settle")))
}

fn recover_segments(
    dt: &mut Delaunay,
    segs: &mut Vec<PslgSegment>,
    min_len: &dyn Fn([f64; 2]) -> f64,
    max_points: usize,
) -> Result<()> {
    for _ in 0..64 {
        let edges = dt.edge_map();
        let mut changed = false;
        let n = segs.len();
        for i in 0..n {
            let s = segs[i];
            let key = (s.a.min(s.b), s.a.max(s.b));
            let (pa, pb) = (dt.pts[s.a], dt.pts[s.b]);
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            let split = match edges.get(&key) {
                None => true,
                Some(adj) => {
                    let long_enough = sqrt(dist2(pa, pb)) > min_len(mid);
                    long_enough
                        && adj.iter().any(|&(_, apex)| {
                            let c = dt.pts[apex];
                            apex >= 3
                                && (c[0] - pa[0]) * (c[0] - pb[0]) + (c[1] - pa[1]) * (c[1] - pb[1])
                                    < 0.0
                        })
                }
            };
            if split {
                let m = dt.insert(mid);
                if m == s.a || m == s.b {
                    return Err(Error::MesherFailure(format!(
                        "segment with marker {} cannot be recovered",
                        s.marker
                    )));
                }
                segs[i] = PslgSegment { a: s.a, b: m, marker: s.marker };
                segs.push(PslgSegment { a: m, b: s.b, marker: s.marker });
                changed = true;
            }
        }
        if dt.pts.len() > max_points {
            return Err(Error::MesherFailure(format!(
                "point budget of {max_points} exceeded while recovering segments"
            )));
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::MesherFailure(format!("segments could not be recovered")))
}

fn finish(dt: &Delaunay, segs: Vec<PslgSegment>) -> Triangulation {
    let mut used = alloc::vec![NONE; dt.pts.len()];
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    for tri in dt.tris.iter().filter(|t| t.alive && t.inside) {
        let mut out = [0usize; 3];
        for k in 0..3 {
            let v = tri.v[k];
            if used[v] == NONE {
                used[v] = points.len();
                points.push(dt.pts[v]);
            }
            out[k] = used[v];
        }
        triangles.push(out);
    }
    let segments = segs
        .into_iter()
        .filter(|s| used[s.a] != NONE && used[s.b] != NONE)
        .map(|s| PslgSegment { a: used[s.a], b: used[s.b], marker: s.marker })
        .collect();
    Triangulation { points, triangles, segments }
}
