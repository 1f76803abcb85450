//! VTK legacy ASCII 3.0 unstructured grids: a writer for solution fields and
//! a strict reader that doubles as a grammar validator.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use eyeflow_core::postproc::VisualFields;

pub const VTK_TRIANGLE: u8 = 5;
pub const VTK_TETRA: u8 = 10;

/// Serialize the fields. Numbers use the shortest representation that
/// reads back exactly, so the output is a pure function of the fields.
pub fn write_vtk(fields: &VisualFields, title: &str) -> String {
    let n = fields.points.len();
    let m = fields.triangles.len();
    let mut s = String::with_capacity(64 * n + 32 * m);
    s.push_str("# vtk DataFile Version 3.0\n");
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &fields.points {
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in &fields.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(s, "CELL_DATA {m}");
    s.push_str("SCALARS region int 1\nLOOKUP_TABLE default\n");
    for r in &fields.cell_region {
        let id = eyeflow_core::mesh::RegionTag::STANDARD.iter().position(|q| q == r).map_or(-1, |i| i as i64);
        let _ = writeln!(s, "{id}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("VECTORS velocity double\n");
    for u in &fields.velocity {
        let _ = writeln!(s, "{:e} {:e} {:e}", u[0], u[1], u[2]);
    }
    for (name, values) in [("pressure_mmHg", &fields.pressure_mmhg), ("temperature_K", &fields.temperature)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("VTK line {line}: {message}")]
pub struct VtkError {
    pub line: usize,
    pub message: String,
}

/// A parsed legacy unstructured grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkGrid {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    /// Point arrays by name, `components` values per point.
    pub point_data: BTreeMap<String, (usize, Vec<f64>)>,
    pub cell_data: BTreeMap<String, (usize, Vec<f64>)>,
}

impl VtkGrid {
    pub fn point_scalars(&self, name: &str) -> Option<&[f64]> {
        self.point_data.get(name).filter(|(c, _)| *c == 1).map(|(_, v)| v.as_slice())
    }
}

/// Whitespace tokens with their line numbers.
struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, message: impl Into<String>) -> VtkError {
        let line = self.toks.get(self.pos).map_or(self.last_line, |t| t.0);
        VtkError { line, message: message.into() }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn next(&mut self, what: &str) -> Result<&'a str, VtkError> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(t.1)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), VtkError> {
        let t = self.next(kw)?;
        if t == kw {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {kw}, got `{t}`")))
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, VtkError> {
        let t = self.next(what)?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("bad {what}: `{t}`"))
        })
    }
}

fn data_type(t: &str) -> bool {
    matches!(
        t,
        "bit" | "unsigned_char" | "char" | "unsigned_short" | "short" | "unsigned_int" | "int" | "unsigned_long" | "long" | "float" | "double"
    )
}

/// Parse and validate a legacy ASCII unstructured grid: header, counts,
/// cell sizes against their types, index ranges and attribute lengths.
pub fn read_vtk(text: &str) -> Result<VtkGrid, VtkError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile Version 3.0") {
        return Err(VtkError { line: 1, message: format!("bad header `{header}`") });
    }
    let title = lines.next().ok_or(VtkError { line: 2, message: "missing title line".into() })?.to_string();
    let toks: Vec<(usize, &str)> =
        lines.enumerate().flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 3, t))).collect();
    let last_line = toks.last().map_or(3, |t| t.0);
    let mut tk = Tokens { toks, pos: 0, last_line };
    tk.keyword("ASCII")?;
    tk.keyword("DATASET")?;
    tk.keyword("UNSTRUCTURED_GRID")?;

    let mut grid = VtkGrid { title, ..Default::default() };
    tk.keyword("POINTS")?;
    let n: usize = tk.parse("point count")?;
    let ty = tk.next("data type")?;
    if !data_type(ty) {
        return Err(tk.err(format!("unknown data type `{ty}`")));
    }
    for _ in 0..n {
        grid.points.push([tk.parse("coordinate")?, tk.parse("coordinate")?, tk.parse("coordinate")?]);
    }

    tk.keyword("CELLS")?;
    let m: usize = tk.parse("cell count")?;
    let size: usize = tk.parse("cell list size")?;
    let mut used = 0;
    for _ in 0..m {
        let k: usize = tk.parse("cell size")?;
        let mut cell = Vec::with_capacity(k);
        for _ in 0..k {
            let v: usize = tk.parse("point index")?;
            if v >= n {
                return Err(tk.err(format!("point index {v} out of range (n = {n})")));
            }
            cell.push(v);
        }
        used += k + 1;
        grid.cells.push(cell);
    }
    if used != size {
        return Err(tk.err(format!("cell list size {size} does not match the {used} values given")));
    }
    tk.keyword("CELL_TYPES")?;
    let mt: usize = tk.parse("cell type count")?;
    if mt != m {
        return Err(tk.err(format!("CELL_TYPES {mt} differs from CELLS {m}")));
    }
    for c in 0..m {
        let t: u8 = tk.parse("cell type")?;
        let want = match t {
            1 => 1,
            3 => 2,
            VTK_TRIANGLE => 3,
            VTK_TETRA => 4,
            _ => return Err(tk.err(format!("unsupported cell type {t}"))),
        };
        if grid.cells[c].len() != want {
            return Err(tk.err(format!("cell {c} of type {t} has {} points", grid.cells[c].len())));
        }
        grid.cell_types.push(t);
    }

    let mut current: Option<(bool, usize)> = None;
    while let Some(t) = tk.peek() {
        match t {
            "POINT_DATA" | "CELL_DATA" => {
                tk.pos += 1;
                let count: usize = tk.parse("attribute count")?;
                let is_point = t == "POINT_DATA";
                let want = if is_point { n } else { m };
                if count != want {
                    return Err(tk.err(format!("{t} {count} does not match {want}")));
                }
                current = Some((is_point, count));
            }
            "SCALARS" | "VECTORS" => {
                let (is_point, count) = current.ok_or_else(|| tk.err(format!("{t} before POINT_DATA or CELL_DATA")))?;
                tk.pos += 1;
                let name = tk.next("array name")?.to_string();
                let ty = tk.next("data type")?;
                if !data_type(ty) {
                    return Err(tk.err(format!("unknown data type `{ty}`")));
                }
                let comps = if t == "VECTORS" {
                    3
                } else {
                    let c = match tk.peek() {
                        Some(x) if x != "LOOKUP_TABLE" => tk.parse::<usize>("component count")?,
                        _ => 1,
                    };
                    if !(1..=4).contains(&c) {
                        return Err(tk.err(format!("component count {c} outside 1..=4")));
                    }
                    tk.keyword("LOOKUP_TABLE")?;
                    tk.next("lookup table name")?;
                    c
                };
                let mut v = Vec::with_capacity(count * comps);
                for _ in 0..count * comps {
                    v.push(tk.parse::<f64>("attribute value")?);
                }
                let map = if is_point { &mut grid.point_data } else { &mut grid.cell_data };
                if map.insert(name.clone(), (comps, v)).is_some() {
                    return Err(tk.err(format!("duplicate array `{name}`")));
                }
            }
            other => return Err(tk.err(format!("unexpected token `{other}`"))),
        }
    }
    Ok(grid)
}
