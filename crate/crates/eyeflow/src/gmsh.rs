//! Gmsh MSH 4.1 ASCII: the subset with `$MeshFormat`, `$PhysicalNames`,
//! `$Entities`, `$Nodes` and `$Elements`.
//!
//! Physical groups map to tags by name, case-insensitively: the region names
//! are `cornea`, `aqueoushumor`, `iris`, `lens`, `vitreous`, `outershell` and
//! the boundary names `gamma_c`, `gamma_i`, `gamma_l`, `gamma_vh`,
//! `gamma_sc`, `gamma_body`, `gamma_amb`. Other sections are skipped.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use eyeflow_core::mesh::{BoundaryTag, Mesh, RegionTag};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MshError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing section ${0}")]
    MissingSection(&'static str),
    #[error("unsupported format version {0}, expected 4.1 ASCII")]
    Version(String),
    #[error("line {line}: non-simplex element of type {kind}")]
    NonSimplex { line: usize, kind: u32 },
    #[error("physical name `{0}` does not map to a region or boundary tag")]
    UnmappedName(String),
    #[error("entity ({dim}, {tag}) carries conflicting physical groups")]
    ConflictingGroups { dim: usize, tag: i64 },
    #[error("{count} cell(s) of entity ({dim}, {tag}) have no region group")]
    UntaggedCells { dim: usize, tag: i64, count: usize },
    #[error("element references unknown node {0}")]
    UnknownNode(u64),
    #[error("mesh has no triangles or tetrahedra")]
    NoCells,
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("cannot write region {0}: it has no physical name")]
    UnnamedRegion(RegionTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Region(RegionTag),
    Boundary(BoundaryTag),
}

fn group_of(name: &str) -> Option<Group> {
    let n = name.to_ascii_lowercase();
    RegionTag::STANDARD
        .into_iter()
        .find(|r| r.to_string() == n)
        .map(Group::Region)
        .or_else(|| BoundaryTag::ALL.into_iter().find(|b| b.to_string() == n).map(Group::Boundary))
}

/// Line cursor over the file with 1-based line numbers.
struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { lines: text.lines().collect(), pos: 0 }
    }

    fn line(&self) -> usize {
        self.pos
    }

    fn err(&self, message: impl Into<String>) -> MshError {
        MshError::Malformed { line: self.pos, message: message.into() }
    }

    /// Next non-blank line.
    fn next(&mut self) -> Option<&'a str> {
        while self.pos < self.lines.len() {
            let l = self.lines[self.pos].trim();
            self.pos += 1;
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<&'a str, MshError> {
        self.next().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn fields<T: std::str::FromStr>(&mut self, what: &str) -> Result<Vec<T>, MshError> {
        let l = self.expect_line(what)?;
        l.split_whitespace().map(|t| t.parse().map_err(|_| self.err(format!("bad {what}: `{t}`")))).collect()
    }

    fn end(&mut self, name: &str) -> Result<(), MshError> {
        let l = self.expect_line(name)?;
        if l == format!("$End{name}") {
            Ok(())
        } else {
            Err(self.err(format!("expected $End{name}, got `{l}`")))
        }
    }
}

fn need<T: Copy>(v: &[T], n: usize, lines: &Lines<'_>, what: &str) -> Result<(), MshError> {
    if v.len() < n {
        Err(lines.err(format!("{what}: expected at least {n} fields, got {}", v.len())))
    } else {
        Ok(())
    }
}

/// Vertices per element type, or `None` for non-simplex types.
fn simplex_nodes(kind: u32) -> Option<(usize, usize)> {
    // (dimension, node count)
    match kind {
        15 => Some((0, 1)),
        1 => Some((1, 2)),
        2 => Some((2, 3)),
        4 => Some((3, 4)),
        _ => None,
    }
}

/// Parse an MSH 4.1 ASCII file into a validated mesh. Cells are reoriented
/// to positive volume.
pub fn parse_msh(text: &str) -> Result<Mesh, MshError> {
    let mut lines = Lines::new(text);
    let mut version_ok = false;
    let mut names: HashMap<(usize, i64), String> = HashMap::new();
    // Physical tags of each entity, keyed by (dim, entity tag).
    let mut entity_groups: HashMap<(usize, i64), Vec<i64>> = HashMap::new();
    let mut have_entities = false;
    let mut coords: Vec<[f64; 3]> = Vec::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    // (dim, entity tag, vertices)
    let mut elements: Vec<(usize, i64, Vec<u64>)> = Vec::new();
    let mut have_nodes = false;
    let mut have_elements = false;

    while let Some(header) = lines.next() {
        match header {
            "$MeshFormat" => {
                let l = lines.expect_line("format line")?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() < 2 || f[0] != "4.1" || f[1] != "0" {
                    return Err(MshError::Version(l.to_string()));
                }
                version_ok = true;
                lines.end("MeshFormat")?;
            }
            "$PhysicalNames" => {
                let n: Vec<usize> = lines.fields("group count")?;
                need(&n, 1, &lines, "$PhysicalNames header")?;
                for _ in 0..n[0] {
                    let l = lines.expect_line("physical name")?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim = it.next().and_then(|t| t.parse::<usize>().ok());
                    let tag = it.next().and_then(|t| t.parse::<i64>().ok());
                    let name = it.next().map(|t| t.trim().trim_matches('"').to_string());
                    match (dim, tag, name) {
                        (Some(d), Some(t), Some(nm)) => {
                            names.insert((d, t), nm);
                        }
                        _ => return Err(lines.err(format!("bad physical name line `{l}`"))),
                    }
                }
                lines.end("PhysicalNames")?;
            }
            "$Entities" => {
                have_entities = true;
                let counts: Vec<usize> = lines.fields("entity counts")?;
                need(&counts, 4, &lines, "$Entities header")?;
                for (dim, &count) in counts.iter().take(4).enumerate() {
                    for _ in 0..count {
                        let f: Vec<f64> = lines.fields("entity")?;
                        // Points carry x y z, higher entities a bounding box.
                        let at = if dim == 0 { 4 } else { 7 };
                        need(&f, at + 1, &lines, "entity")?;
                        let np = f[at] as usize;
                        need(&f, at + 1 + np, &lines, "entity physical tags")?;
                        let tags = f[at + 1..at + 1 + np].iter().map(|&t| t as i64).collect();
                        entity_groups.insert((dim, f[0] as i64), tags);
                    }
                }
                lines.end("Entities")?;
            }
            "$Nodes" => {
                have_nodes = true;
                let h: Vec<u64> = lines.fields("$Nodes header")?;
                need(&h, 4, &lines, "$Nodes header")?;
                for _ in 0..h[0] {
                    let b: Vec<u64> = lines.fields("node block header")?;
                    need(&b, 4, &lines, "node block header")?;
                    let (parametric, n) = (b[2] != 0, b[3] as usize);
                    let mut tags = Vec::with_capacity(n);
                    for _ in 0..n {
                        let t: Vec<u64> = lines.fields("node tag")?;
                        need(&t, 1, &lines, "node tag")?;
                        tags.push(t[0]);
                    }
                    for tag in tags {
                        let x: Vec<f64> = lines.fields("node coordinates")?;
                        need(&x, 3, &lines, "node coordinates")?;
                        if !parametric && x.len() != 3 {
                            return Err(lines.err("node coordinates: expected 3 values"));
                        }
                        if node_index.insert(tag, coords.len()).is_some() {
                            return Err(lines.err(format!("duplicate node tag {tag}")));
                        }
                        coords.push([x[0], x[1], x[2]]);
                    }
                }
                lines.end("Nodes")?;
            }
            "$Elements" => {
                have_elements = true;
                let h: Vec<u64> = lines.fields("$Elements header")?;
                need(&h, 4, &lines, "$Elements header")?;
                for _ in 0..h[0] {
                    let b: Vec<i64> = lines.fields("element block header")?;
                    need(&b, 4, &lines, "element block header")?;
                    let (edim, etag, kind, n) = (b[0] as usize, b[1], b[2] as u32, b[3] as usize);
                    let Some((sdim, nv)) = simplex_nodes(kind) else {
                        return Err(MshError::NonSimplex { line: lines.line(), kind });
                    };
                    if sdim != edim {
                        return Err(lines.err(format!("element type {kind} in an entity of dimension {edim}")));
                    }
                    for _ in 0..n {
                        let e: Vec<u64> = lines.fields("element")?;
                        if e.len() != nv + 1 {
                            return Err(lines.err(format!("element type {kind} needs {nv} nodes, got {}", e.len().saturating_sub(1))));
                        }
                        elements.push((edim, etag, e[1..].to_vec()));
                    }
                }
                lines.end("Elements")?;
            }
            h if h.starts_with('$') && !h.starts_with("$End") => {
                let end = format!("$End{}", &h[1..]);
                loop {
                    match lines.next() {
                        Some(l) if l == end => break,
                        Some(_) => {}
                        None => return Err(lines.err(format!("unterminated section {h}"))),
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected line `{other}` outside a section"))),
        }
    }
    if !version_ok {
        return Err(MshError::MissingSection("MeshFormat"));
    }
    if !have_entities {
        return Err(MshError::MissingSection("Entities"));
    }
    if !have_nodes {
        return Err(MshError::MissingSection("Nodes"));
    }
    if !have_elements {
        return Err(MshError::MissingSection("Elements"));
    }

    // Resolve the single group of every entity.
    let mut resolved: HashMap<(usize, i64), Group> = HashMap::new();
    for (&(dim, tag), phys) in &entity_groups {
        let mut group = None;
        for &p in phys {
            let Some(name) = names.get(&(dim, p)) else { continue };
            let g = group_of(name).ok_or_else(|| MshError::UnmappedName(name.clone()))?;
            if group.is_some_and(|h| h != g) {
                return Err(MshError::ConflictingGroups { dim, tag });
            }
            group = Some(g);
        }
        if let Some(g) = group {
            resolved.insert((dim, tag), g);
        }
    }
    if let Some(name) = names.values().find(|n| group_of(n).is_none()) {
        return Err(MshError::UnmappedName(name.clone()));
    }

    let dim = elements.iter().map(|e| e.0).max().unwrap_or(0);
    if dim < 2 {
        return Err(MshError::NoCells);
    }
    let mut cells = Vec::new();
    let mut regions = Vec::new();
    let mut facets = Vec::new();
    let mut facet_tags = Vec::new();
    let mut untagged: BTreeMap<i64, usize> = BTreeMap::new();
    let index = |t: &u64| node_index.get(t).copied().ok_or(MshError::UnknownNode(*t));
    for (edim, etag, verts) in &elements {
        if *edim == dim {
            match resolved.get(&(dim, *etag)) {
                Some(Group::Region(r)) => {
                    for v in verts {
                        cells.push(index(v)?);
                    }
                    regions.push(*r);
                }
                _ => *untagged.entry(*etag).or_default() += 1,
            }
        } else if *edim + 1 == dim {
            if let Some(Group::Boundary(b)) = resolved.get(&(*edim, *etag)) {
                for v in verts {
                    facets.push(index(v)?);
                }
                facet_tags.push(*b);
            }
        } else {
            // Lower-dimensional entities (points, edges of a 3D mesh) are
            // still checked for dangling node references.
            for v in verts {
                index(v)?;
            }
        }
    }
    if let Some((&tag, &count)) = untagged.iter().next() {
        return Err(MshError::UntaggedCells { dim, tag, count });
    }
    if dim == 2 {
        for c in &mut coords {
            c[2] = 0.0;
        }
    }
    let mut mesh = Mesh::from_parts(dim, coords, cells, regions, facets, facet_tags)
        .map_err(|e| MshError::Invalid(e.to_string()))?;
    mesh = reoriented(mesh).map_err(|e| MshError::Invalid(e.to_string()))?;
    let violations = mesh.validate();
    if let Some(first) = violations.first() {
        return Err(MshError::Invalid(format!("{} violation(s), first: {first}", violations.len())));
    }
    Ok(mesh)
}

/// Swap two vertices of every negatively oriented cell.
fn reoriented(mesh: Mesh) -> eyeflow_core::Result<Mesh> {
    let d = mesh.dim();
    let mut cells = Vec::with_capacity(mesh.n_cells() * (d + 1));
    for c in 0..mesh.n_cells() {
        let mut v = mesh.cell(c).to_vec();
        if mesh.signed_volume(c) < 0.0 {
            v.swap(0, 1);
        }
        cells.extend(v);
    }
    let facets = (0..mesh.n_facets()).flat_map(|f| mesh.facet(f).to_vec()).collect();
    Mesh::from_parts(
        d,
        mesh.vertices().to_vec(),
        cells,
        mesh.cell_regions().to_vec(),
        facets,
        mesh.facet_tags().to_vec(),
    )
}

/// Write `mesh` as MSH 4.1 ASCII with one entity per physical group.
pub fn write_msh(mesh: &Mesh) -> Result<String, MshError> {
    let d = mesh.dim();
    let (cell_kind, facet_kind) = if d == 2 { (2, 1) } else { (4, 2) };
    let mut regions: Vec<RegionTag> = mesh.cell_regions().to_vec();
    regions.sort();
    regions.dedup();
    if let Some(&r) = regions.iter().find(|r| !RegionTag::STANDARD.contains(r)) {
        return Err(MshError::UnnamedRegion(r));
    }
    let mut tags: Vec<BoundaryTag> = mesh.facet_tags().to_vec();
    tags.sort();
    tags.dedup();

    let mut s = String::new();
    s.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    let _ = writeln!(s, "$PhysicalNames\n{}", regions.len() + tags.len());
    for (i, b) in tags.iter().enumerate() {
        let _ = writeln!(s, "{} {} \"{b}\"", d - 1, i + 1);
    }
    for (i, r) in regions.iter().enumerate() {
        let _ = writeln!(s, "{d} {} \"{r}\"", i + 1);
    }
    s.push_str("$EndPhysicalNames\n");

    // Entity tag == physical tag == 1-based group index.
    let (lo, hi) = mesh.bounds();
    let bbox = format!("{:e} {:e} {:e} {:e} {:e} {:e}", lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]);
    let mut counts = [0usize; 4];
    counts[d - 1] = tags.len();
    counts[d] = regions.len();
    s.push_str("$Entities\n");
    let _ = writeln!(s, "{} {} {} {}", counts[0], counts[1], counts[2], counts[3]);
    for i in 0..tags.len() {
        let _ = writeln!(s, "{} {bbox} 1 {} 0", i + 1, i + 1);
    }
    for i in 0..regions.len() {
        let _ = writeln!(s, "{} {bbox} 1 {} 0", i + 1, i + 1);
    }
    s.push_str("$EndEntities\n");

    // All nodes live in the first top-dimensional entity.
    let n = mesh.n_vertices();
    let _ = writeln!(s, "$Nodes\n1 {n} 1 {n}\n{d} 1 0 {n}");
    for i in 0..n {
        let _ = writeln!(s, "{}", i + 1);
    }
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} {:e}", v[0], v[1], v[2]);
    }
    s.push_str("$EndNodes\n");

    let n_el = mesh.n_facets() + mesh.n_cells();
    let _ = writeln!(s, "$Elements\n{} {n_el} 1 {n_el}", tags.len() + regions.len());
    let mut next = 1;
    for (i, &b) in tags.iter().enumerate() {
        let members: Vec<usize> = (0..mesh.n_facets()).filter(|&f| mesh.facet_tag(f) == b).collect();
        let _ = writeln!(s, "{} {} {facet_kind} {}", d - 1, i + 1, members.len());
        for f in members {
            let _ = write!(s, "{next}");
            for v in mesh.facet(f) {
                let _ = write!(s, " {}", v + 1);
            }
            s.push('\n');
            next += 1;
        }
    }
    for (i, &r) in regions.iter().enumerate() {
        let members: Vec<usize> = (0..mesh.n_cells()).filter(|&c| mesh.region(c) == r).collect();
        let _ = writeln!(s, "{d} {} {cell_kind} {}", i + 1, members.len());
        for c in members {
            let _ = write!(s, "{next}");
            for v in mesh.cell(c) {
                let _ = write!(s, " {}", v + 1);
            }
            s.push('\n');
            next += 1;
        }
    }
    s.push_str("$EndElements\n");
    Ok(s)
}
