//! Scenario configuration: flat `key = value` text in four sections.
//!
//! ```text
//! [physics]
//! beta = 3e-4
//! posture = standing
//! [geometry]
//! ac_depth = 3e-3      # or `mesh = path/to/file.msh`, not both
//! [solver]
//! newton_rtol = 1e-8
//! [output]
//! vtk = solution.vtk
//! ```
//!
//! Everything is SI. Missing keys take their defaults, unknown keys and
//! sections are rejected, and [`ScenarioConfig::to_text`] writes a file that
//! parses back to an identical config.

use std::fmt::Write as _;
use std::path::PathBuf;

use eyeflow_core::coupled::{AmbientReference, PhysicalParams, Posture, SchurKind};
use eyeflow_core::mesh::{EyeGeometry, RegionTag};
use eyeflow_core::Error as CoreError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownSection { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::DuplicateKey { line, .. }
            | ConfigError::BadValue { line, .. } => Some(*line),
            ConfigError::Invalid { .. } | ConfigError::Missing { .. } => None,
        }
    }

    /// The offending key, when the error is about one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::BadValue { key, .. }
            | ConfigError::Invalid { key, .. }
            | ConfigError::Missing { key } => Some(key),
            _ => None,
        }
    }
}

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Generated(EyeGeometry),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    Gmres,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub newton_rtol: f64,
    pub newton_atol: f64,
    pub newton_max_iter: usize,
    pub max_halvings: usize,
    pub linear: LinearSolver,
    pub linear_rtol: f64,
    pub restart: usize,
    pub linear_max_iter: usize,
    /// Block preconditioner on (default) or plain GMRES.
    pub preconditioned: bool,
    pub schur: SchurKind,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub ambient_reference: AmbientReference,
    /// Retry with buoyancy continuation if the direct Newton run fails.
    pub continuation: bool,
    /// Also run unpreconditioned GMRES on every Newton step for comparison.
    pub compare_unpreconditioned: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_rtol: 1e-8,
            newton_atol: 1e-12,
            newton_max_iter: 30,
            max_halvings: 8,
            linear: LinearSolver::Gmres,
            linear_rtol: 1e-10,
            restart: 100,
            linear_max_iter: 500,
            preconditioned: true,
            schur: SchurKind::Pcd,
            inner_tol: 1e-2,
            inner_max_iter: 200,
            ambient_reference: AmbientReference::TAmb,
            continuation: true,
            compare_unpreconditioned: false,
        }
    }
}

/// File names are relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub display_offset_mmhg: f64,
    pub vtk: String,
    /// Write the once-refined mesh instead of vertex subsampling.
    pub refine_vtk: bool,
    pub probe_csv: String,
    /// Probe segment; the pupillary axis of a generated eye when unset.
    pub probe_start: Option<[f64; 2]>,
    pub probe_end: Option<[f64; 2]>,
    pub probe_samples: usize,
    pub log: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            display_offset_mmhg: 15.5,
            vtk: "solution.vtk".into(),
            refine_vtk: false,
            probe_csv: "probe.csv".into(),
            probe_start: None,
            probe_end: None,
            probe_samples: 200,
            log: "solve.log".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Gravity direction follows `posture`.
    pub params: PhysicalParams,
    pub posture: Posture,
    pub domain: Domain,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            params: PhysicalParams::default(),
            posture: Posture::Standing,
            domain: Domain::Generated(EyeGeometry::default()),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

const SECTIONS: [&str; 4] = ["physics", "geometry", "solver", "output"];

const PHYSICS_KEYS: [&str; 13] =
    ["mu", "rho", "cp", "beta", "k_ah", "g", "t_ref", "h_bl", "h_amb", "h_r", "e", "t_bl", "t_amb"];

/// Conductivity keys of the solid regions, required when the region is meshed.
pub const CONDUCTIVITY_KEYS: [(&str, RegionTag); 5] = [
    ("k_cornea", RegionTag::Cornea),
    ("k_iris", RegionTag::Iris),
    ("k_lens", RegionTag::Lens),
    ("k_vitreous", RegionTag::Vitreous),
    ("k_outershell", RegionTag::OuterShell),
];

const GEOMETRY_KEYS: [&str; 15] = [
    "globe_radius",
    "shell_thickness",
    "cornea_radius",
    "cornea_bulge",
    "cornea_thickness",
    "chamber_height",
    "ac_depth",
    "pc_gap",
    "iris_thickness",
    "pupil_aperture",
    "lens_half_thickness",
    "lens_half_height",
    "ambient_strip",
    "h",
    "fluid_size_ratio",
];

fn physics_field<'a>(p: &'a mut PhysicalParams, key: &str) -> Option<&'a mut f64> {
    Some(match key {
        "mu" => &mut p.mu,
        "rho" => &mut p.rho,
        "cp" => &mut p.cp,
        "beta" => &mut p.beta,
        "k_ah" => &mut p.k_ah,
        "g" => &mut p.g,
        "t_ref" => &mut p.t_ref,
        "h_bl" => &mut p.h_bl,
        "h_amb" => &mut p.h_amb,
        "h_r" => &mut p.h_r,
        "e" => &mut p.e,
        "t_bl" => &mut p.t_bl,
        "t_amb" => &mut p.t_amb,
        _ => return None,
    })
}

fn geometry_field<'a>(g: &'a mut EyeGeometry, key: &str) -> Option<&'a mut f64> {
    Some(match key {
        "globe_radius" => &mut g.globe_radius,
        "shell_thickness" => &mut g.shell_thickness,
        "cornea_radius" => &mut g.cornea_radius,
        "cornea_bulge" => &mut g.cornea_bulge,
        "cornea_thickness" => &mut g.cornea_thickness,
        "chamber_height" => &mut g.chamber_height,
        "ac_depth" => &mut g.ac_depth,
        "pc_gap" => &mut g.pc_gap,
        "iris_thickness" => &mut g.iris_thickness,
        "pupil_aperture" => &mut g.pupil_aperture,
        "lens_half_thickness" => &mut g.lens_half_thickness,
        "lens_half_height" => &mut g.lens_half_height,
        "ambient_strip" => &mut g.ambient_strip,
        "h" => &mut g.h,
        "fluid_size_ratio" => &mut g.fluid_size_ratio,
        _ => return None,
    })
}

struct Value<'a> {
    line: usize,
    key: &'a str,
    text: &'a str,
}

impl Value<'_> {
    fn bad(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { line: self.line, key: self.key.to_string(), message: message.into() }
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.text.parse().map_err(|_| self.bad(format!("`{}` is not a number", self.text)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad("must be finite"))
        }
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.text.parse().map_err(|_| self.bad(format!("`{}` is not a non-negative integer", self.text)))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.text {
            "true" => Ok(true),
            "false" => Ok(false),
            t => Err(self.bad(format!("`{t}` is not true or false"))),
        }
    }

    fn point(&self) -> Result<[f64; 2], ConfigError> {
        let parts: Vec<&str> = self.text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(self.bad("expected `x, y`"));
        }
        let mut p = [0.0; 2];
        for (slot, t) in p.iter_mut().zip(parts) {
            *slot = Value { text: t, ..*self }.f64()?;
        }
        Ok(p)
    }

    fn name(&self) -> Result<String, ConfigError> {
        if self.text.is_empty() {
            Err(self.bad("empty file name"))
        } else {
            Ok(self.text.to_string())
        }
    }
}

/// Strip a `#` comment that starts the line or follows whitespace.
fn strip_comment(line: &str) -> &str {
    let b = line.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        if c == b'#' && (i == 0 || b[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// Parse configuration text. Key names are case-insensitive.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut geometry = EyeGeometry::default();
    let mut geometry_key: Option<String> = None;
    let mut mesh: Option<PathBuf> = None;
    let mut k_solid: Vec<(RegionTag, f64)> = Vec::new();
    let mut section: Option<&str> = None;
    let mut seen: Vec<(String, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("unterminated section header `{body}`") })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|s| s.eq_ignore_ascii_case(name))
                    .ok_or_else(|| ConfigError::UnknownSection { line, name: name.to_string() })?,
            );
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{body}`") })?;
        let key = k.trim().to_ascii_lowercase();
        let text = v.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, message: "empty key".into() });
        }
        let Some(sec) = section else {
            return Err(ConfigError::Syntax { line, message: format!("key `{key}` appears before any section") });
        };
        if seen.iter().any(|(s, k)| s == sec && *k == key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        seen.push((sec.to_string(), key.clone()));
        let val = Value { line, key: &key, text };
        let unknown = || ConfigError::UnknownKey { line, section: sec.to_string(), key: key.clone() };

        match sec {
            "physics" => {
                if let Some(f) = physics_field(&mut cfg.params, &key) {
                    *f = val.f64()?;
                } else if let Some(&(_, region)) = CONDUCTIVITY_KEYS.iter().find(|(n, _)| *n == key) {
                    k_solid.push((region, val.f64()?));
                } else if key == "posture" {
                    cfg.posture = text.parse().map_err(|_| val.bad("expected standing, prone or supine"))?;
                } else {
                    return Err(unknown());
                }
            }
            "geometry" => {
                if key == "mesh" {
                    mesh = Some(PathBuf::from(val.name()?));
                } else if let Some(f) = geometry_field(&mut geometry, &key) {
                    *f = val.f64()?;
                    geometry_key.get_or_insert(key.clone());
                } else {
                    return Err(unknown());
                }
            }
            "solver" => {
                let s = &mut cfg.solver;
                match key.as_str() {
                    "newton_rtol" => s.newton_rtol = val.f64()?,
                    "newton_atol" => s.newton_atol = val.f64()?,
                    "newton_max_iter" => s.newton_max_iter = val.usize()?,
                    "max_halvings" => s.max_halvings = val.usize()?,
                    "linear" => {
                        s.linear = match text {
                            "gmres" => LinearSolver::Gmres,
                            "direct" => LinearSolver::Direct,
                            _ => return Err(val.bad("expected gmres or direct")),
                        }
                    }
                    "linear_rtol" => s.linear_rtol = val.f64()?,
                    "restart" => s.restart = val.usize()?,
                    "linear_max_iter" => s.linear_max_iter = val.usize()?,
                    "preconditioner" => {
                        s.preconditioned = match text {
                            "block" => true,
                            "none" => false,
                            _ => return Err(val.bad("expected block or none")),
                        }
                    }
                    "schur" => {
                        s.schur = match text {
                            "pcd" => SchurKind::Pcd,
                            "mass" => SchurKind::Mass,
                            _ => return Err(val.bad("expected pcd or mass")),
                        }
                    }
                    "inner_tol" => s.inner_tol = val.f64()?,
                    "inner_max_iter" => s.inner_max_iter = val.usize()?,
                    "ambient_reference" => {
                        s.ambient_reference = match text {
                            "t_amb" => AmbientReference::TAmb,
                            "t_bl_verbatim" => AmbientReference::TBlVerbatim,
                            _ => return Err(val.bad("expected t_amb or t_bl_verbatim")),
                        }
                    }
                    "continuation" => s.continuation = val.bool()?,
                    "compare_unpreconditioned" => s.compare_unpreconditioned = val.bool()?,
                    _ => return Err(unknown()),
                }
            }
            "output" => {
                let o = &mut cfg.output;
                match key.as_str() {
                    "display_offset_mmhg" => o.display_offset_mmhg = val.f64()?,
                    "vtk" => o.vtk = val.name()?,
                    "refine_vtk" => o.refine_vtk = val.bool()?,
                    "probe_csv" => o.probe_csv = val.name()?,
                    "probe_start" => o.probe_start = Some(val.point()?),
                    "probe_end" => o.probe_end = Some(val.point()?),
                    "probe_samples" => o.probe_samples = val.usize()?,
                    "log" => o.log = val.name()?,
                    _ => return Err(unknown()),
                }
            }
            _ => unreachable!("section names come from SECTIONS"),
        }
    }

    cfg.domain = match (mesh, geometry_key) {
        (Some(_), Some(g)) => {
            return Err(ConfigError::Invalid {
                key: "mesh".into(),
                message: format!("set either a mesh file or geometry parameters, not both (`{g}` is also set)"),
            })
        }
        (Some(path), None) => Domain::File(path),
        (None, _) => Domain::Generated(geometry),
    };
    k_solid.sort_by_key(|(r, _)| CONDUCTIVITY_KEYS.iter().position(|(_, q)| q == r));
    cfg.params.k_solid = k_solid;
    cfg.params.set_posture(cfg.posture);
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

impl ScenarioConfig {
    /// Check every invariant, naming the key at fault.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| match e {
            CoreError::InvalidParameter { name, reason } => invalid(name, reason),
            CoreError::NonPositiveCoefficient { region, value } => {
                invalid(&conductivity_key(region), format!("must be positive, got {value}"))
            }
            other => invalid("physics", other.to_string()),
        })?;
        if let Domain::Generated(g) = &self.domain {
            let mut g = g.clone();
            for key in GEOMETRY_KEYS {
                let v = *geometry_field(&mut g, key).expect("listed key");
                let ok = if key == "pc_gap" { v >= 0.0 } else { v > 0.0 };
                if !ok {
                    return Err(invalid(key, format!("must be {}, got {v}", if key == "pc_gap" { "non-negative" } else { "positive" })));
                }
            }
            g.landmarks().map_err(|e| invalid("geometry", e.to_string()))?;
        }
        let s = &self.solver;
        for (key, v) in [("newton_rtol", s.newton_rtol), ("linear_rtol", s.linear_rtol), ("inner_tol", s.inner_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(key, format!("must lie in (0, 1), got {v}")));
            }
        }
        if s.newton_atol < 0.0 {
            return Err(invalid("newton_atol", "must be non-negative"));
        }
        for (key, v) in [
            ("newton_max_iter", s.newton_max_iter),
            ("restart", s.restart),
            ("linear_max_iter", s.linear_max_iter),
            ("inner_max_iter", s.inner_max_iter),
        ] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        let o = &self.output;
        if o.probe_samples == 0 {
            return Err(invalid("probe_samples", "must be at least 1"));
        }
        match (o.probe_start, o.probe_end) {
            (Some(_), None) => return Err(invalid("probe_end", "probe_start is set without probe_end")),
            (None, Some(_)) => return Err(invalid("probe_start", "probe_end is set without probe_start")),
            _ => {}
        }
        Ok(())
    }

    /// The same scenario in another posture.
    pub fn with_posture(mut self, posture: Posture) -> Self {
        self.posture = posture;
        self.params.set_posture(posture);
        self
    }

    /// The same scenario on a mesh read from `path`.
    pub fn with_mesh(mut self, path: PathBuf) -> Self {
        self.domain = Domain::File(path);
        self
    }

    /// Conductivity of `region`, or an error naming the missing key.
    pub fn require_conductivity(&self, region: RegionTag) -> Result<f64, ConfigError> {
        if region == RegionTag::AqueousHumor {
            return Ok(self.params.k_ah);
        }
        self.params
            .k_solid
            .iter()
            .find(|(r, _)| *r == region)
            .map(|&(_, k)| k)
            .ok_or_else(|| ConfigError::Missing { key: conductivity_key(region) })
    }

    /// Configuration text that [`load_config`] parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        s.push_str("[physics]\n");
        let mut pc = p.clone();
        for key in PHYSICS_KEYS {
            let _ = writeln!(s, "{key} = {:?}", *physics_field(&mut pc, key).expect("listed key"));
        }
        for (key, region) in CONDUCTIVITY_KEYS {
            if let Some(&(_, k)) = p.k_solid.iter().find(|(r, _)| *r == region) {
                let _ = writeln!(s, "{key} = {k:?}");
            }
        }
        let _ = writeln!(s, "posture = {}", self.posture);

        s.push_str("\n[geometry]\n");
        match &self.domain {
            Domain::File(path) => {
                let _ = writeln!(s, "mesh = {}", path.display());
            }
            Domain::Generated(g) => {
                let mut g = g.clone();
                for key in GEOMETRY_KEYS {
                    let _ = writeln!(s, "{key} = {:?}", *geometry_field(&mut g, key).expect("listed key"));
                }
            }
        }

        let v = &self.solver;
        s.push_str("\n[solver]\n");
        let _ = writeln!(s, "newton_rtol = {:?}", v.newton_rtol);
        let _ = writeln!(s, "newton_atol = {:?}", v.newton_atol);
        let _ = writeln!(s, "newton_max_iter = {}", v.newton_max_iter);
        let _ = writeln!(s, "max_halvings = {}", v.max_halvings);
        let _ = writeln!(s, "linear = {}", if v.linear == LinearSolver::Gmres { "gmres" } else { "direct" });
        let _ = writeln!(s, "linear_rtol = {:?}", v.linear_rtol);
        let _ = writeln!(s, "restart = {}", v.restart);
        let _ = writeln!(s, "linear_max_iter = {}", v.linear_max_iter);
        let _ = writeln!(s, "preconditioner = {}", if v.preconditioned { "block" } else { "none" });
        let _ = writeln!(s, "schur = {}", if v.schur == SchurKind::Pcd { "pcd" } else { "mass" });
        let _ = writeln!(s, "inner_tol = {:?}", v.inner_tol);
        let _ = writeln!(s, "inner_max_iter = {}", v.inner_max_iter);
        let amb = match v.ambient_reference {
            AmbientReference::TAmb => "t_amb",
            AmbientReference::TBlVerbatim => "t_bl_verbatim",
        };
        let _ = writeln!(s, "ambient_reference = {amb}");
        let _ = writeln!(s, "continuation = {}", v.continuation);
        let _ = writeln!(s, "compare_unpreconditioned = {}", v.compare_unpreconditioned);

        let o = &self.output;
        s.push_str("\n[output]\n");
        let _ = writeln!(s, "display_offset_mmhg = {:?}", o.display_offset_mmhg);
        let _ = writeln!(s, "vtk = {}", o.vtk);
        let _ = writeln!(s, "refine_vtk = {}", o.refine_vtk);
        let _ = writeln!(s, "probe_csv = {}", o.probe_csv);
        if let (Some(a), Some(b)) = (o.probe_start, o.probe_end) {
            let _ = writeln!(s, "probe_start = {:?}, {:?}", a[0], a[1]);
            let _ = writeln!(s, "probe_end = {:?}, {:?}", b[0], b[1]);
        }
        let _ = writeln!(s, "probe_samples = {}", o.probe_samples);
        let _ = writeln!(s, "log = {}", o.log);
        s
    }
}

/// Config key holding the conductivity of `region`.
pub fn conductivity_key(region: RegionTag) -> String {
    match region {
        RegionTag::AqueousHumor => "k_ah".into(),
        r => CONDUCTIVITY_KEYS.iter().find(|(_, q)| *q == r).map_or_else(|| format!("k_{r}"), |(k, _)| k.to_string()),
    }
}
