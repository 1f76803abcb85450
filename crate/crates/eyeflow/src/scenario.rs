//! The mesh → assemble → solve → postprocess pipeline for one configuration.

use std::error::Error as StdError;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use eyeflow_core::coupled::{
    eye_thermal_bcs, CoupledProblem, Forcing, LinearMethod, LinearOptions, NewtonControl, PhysicalParams, SolveOptions,
};
use eyeflow_core::linsolve::BlockOptions;
use eyeflow_core::mesh::{generate_eye_cross_section, EyeGeometry, Mesh, RegionTag};
use eyeflow_core::postproc::{eye_axis, eye_wall_points, in_anterior_chamber, FieldOutput, ProbeSample, WallPattern};
use eyeflow_core::verification::{run_hydrostatic_check, HydrostaticReport};

use crate::config::{Domain, LinearSolver, ScenarioConfig};
use crate::gmsh::parse_msh;
use crate::output::{matrix_market, matrix_market_vector, write_probe_csv};
use crate::vtk::write_vtk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Mesh,
    Setup,
    Solve,
    Postprocess,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Mesh => "mesh",
            Stage::Setup => "setup",
            Stage::Solve => "solve",
            Stage::Postprocess => "postprocess",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn StdError + Send + Sync>,
}

fn at<E: Into<Box<dyn StdError + Send + Sync>>>(stage: Stage) -> impl FnOnce(E) -> StageError {
    move |e| StageError { stage, source: e.into() }
}

/// A configuration together with its mesh.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: Mesh,
    /// Set for generated meshes; enables the eye-specific derived checks.
    pub geometry: Option<EyeGeometry>,
}

impl Scenario {
    /// Validate the configuration and build or read the mesh.
    pub fn prepare(config: ScenarioConfig) -> Result<Self, StageError> {
        config.validate().map_err(at(Stage::Config))?;
        let (mesh, geometry) = match &config.domain {
            Domain::Generated(g) => (generate_eye_cross_section(g).map_err(at(Stage::Mesh))?, Some(g.clone())),
            Domain::File(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| StageError { stage: Stage::Mesh, source: format!("{}: {e}", path.display()).into() })?;
                (parse_msh(&text).map_err(at(Stage::Mesh))?, None)
            }
        };
        Ok(Scenario { config, mesh, geometry })
    }

    /// Physical parameters with every meshed solid region's conductivity
    /// present.
    pub fn params(&self) -> Result<PhysicalParams, StageError> {
        let mut regions: Vec<RegionTag> = self.mesh.cell_regions().to_vec();
        regions.sort();
        regions.dedup();
        for r in regions {
            self.config.require_conductivity(r).map_err(at(Stage::Setup))?;
        }
        Ok(self.config.params.clone())
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.config.solver;
        SolveOptions {
            newton: NewtonControl {
                rtol: s.newton_rtol,
                atol: s.newton_atol,
                max_iter: s.newton_max_iter,
                max_halvings: s.max_halvings,
            },
            linear: LinearOptions {
                method: match s.linear {
                    LinearSolver::Gmres => LinearMethod::Gmres,
                    LinearSolver::Direct => LinearMethod::Direct,
                },
                preconditioned: s.preconditioned,
                schur: s.schur,
                block: BlockOptions { inner_tol: s.inner_tol, inner_max_iter: s.inner_max_iter, ..BlockOptions::default() },
                rtol: s.linear_rtol,
                restart: s.restart,
                max_iter: s.linear_max_iter,
                compare_unpreconditioned: s.compare_unpreconditioned,
            },
            continuation: s.continuation,
        }
    }

    pub fn problem(&self) -> Result<CoupledProblem<'_>, StageError> {
        let params = self.params()?;
        let bcs = eye_thermal_bcs(&params, self.config.solver.ambient_reference);
        CoupledProblem::new(&self.mesh, params, &bcs, Forcing::default()).map_err(at(Stage::Setup))
    }

    /// Probe segment from the config, else the pupillary axis of a
    /// generated eye.
    pub fn probe_segment(&self) -> Option<([f64; 2], [f64; 2])> {
        let o = &self.config.output;
        match (o.probe_start, o.probe_end, &self.geometry) {
            (Some(a), Some(b), _) => Some((a, b)),
            (_, _, Some(g)) => eye_axis(g).ok(),
            _ => None,
        }
    }

    /// Run the whole pipeline. A Newton run that stops short is returned
    /// with its report flagged, not as an error.
    pub fn run(&self) -> Result<Solution<'_>, StageError> {
        let mut problem = self.problem()?;
        let (state, report) = problem.solve(None, &self.solve_options()).map_err(at(Stage::Solve))?;
        let mut output = FieldOutput::new(&problem, state, Some(report), self.config.output.display_offset_mmhg)
            .map_err(at(Stage::Postprocess))?;
        let probe = match self.probe_segment() {
            Some((a, b)) => output.probe_line(a, b, self.config.output.probe_samples).map_err(at(Stage::Postprocess))?,
            None => Vec::new(),
        };
        let mut eye = None;
        if let Some(g) = &self.geometry {
            let lm = g.landmarks().map_err(at(Stage::Postprocess))?;
            let wall = output.wall_pattern(&eye_wall_points(g).map_err(at(Stage::Postprocess))?).map_err(at(Stage::Postprocess))?;
            let hydrostatic = run_hydrostatic_check(&output, g, self.config.posture).map_err(at(Stage::Postprocess))?;
            let chamber_vortices = output.stream.count_where(|q| in_anterior_chamber(&lm, q));
            eye = Some(EyeChecks { wall, hydrostatic, chamber_vortices });
        }
        Ok(Solution { problem, output, probe, eye })
    }
}

/// Derived checks that need the eye landmarks.
#[derive(Debug, Clone)]
pub struct EyeChecks {
    pub wall: WallPattern,
    pub hydrostatic: HydrostaticReport,
    /// Recirculation cells in the anterior chamber.
    pub chamber_vortices: usize,
}

pub struct Solution<'m> {
    pub problem: CoupledProblem<'m>,
    pub output: FieldOutput<'m>,
    pub probe: Vec<ProbeSample>,
    pub eye: Option<EyeChecks>,
}

impl Solution<'_> {
    pub fn converged(&self) -> bool {
        self.output.report.as_ref().is_some_and(|r| r.converged)
    }

    /// Convergence report followed by the derived metrics.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.output.report {
            let _ = writeln!(s, "{r}");
        }
        let m = &self.output.metrics;
        let _ = writeln!(s, "metrics max_speed_mps {:.6e}", m.max_speed);
        for (name, e) in [("t_min_K", &m.t_min), ("t_max_K", &m.t_max)] {
            let tags: Vec<String> = e.tags.iter().map(|t| t.to_string()).collect();
            let regions: Vec<String> = e.regions.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                s,
                "metrics {name} {:.6} at ({:.6e}, {:.6e}) regions [{}] tags [{}]",
                e.value,
                e.point[0],
                e.point[1],
                regions.join(" "),
                tags.join(" ")
            );
        }
        let _ = writeln!(s, "metrics p_min_mmHg {:.6} p_max_mmHg {:.6} span_Pa {:.6e}", m.p_min_mmhg, m.p_max_mmhg, -m.p_min_pa);
        let _ = writeln!(s, "metrics recirculation_cells {}", m.recirculation);
        let _ = writeln!(s, "metrics energy_net_W_per_m {:.6e} relative_imbalance {:.3e}", m.energy.net(), m.energy.relative_imbalance());
        for (tag, q) in &m.energy.flows {
            let _ = writeln!(s, "metrics heat_out {tag} {q:.6e}");
        }
        if let Some(e) = &self.eye {
            let _ = writeln!(s, "eye chamber_vortices {}", e.chamber_vortices);
            let _ = writeln!(
                s,
                "eye wall posterior_upward {} cornea_downward {}",
                e.wall.posterior_upward(),
                e.wall.cornea_downward()
            );
            for (name, h) in [("chamber", &e.hydrostatic.chamber), ("fluid", &e.hydrostatic.fluid)] {
                let ratio = h.ratio.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
                let _ = writeln!(
                    s,
                    "eye hydrostatic {name} span_mmHg {:.6} extent_m {:.6e} rho_g_H_Pa {:.6e} ratio {ratio}",
                    h.span_mmhg, h.extent_m, h.rho_g_h_pa
                );
            }
        }
        if let (Some(a), Some(b)) = (self.probe.first(), self.probe.last()) {
            let _ = writeln!(s, "probe {} samples, T from {:.6} to {:.6} K", self.probe.len(), a.temperature, b.temperature);
        } else {
            let _ = writeln!(s, "probe skipped: no segment configured");
        }
        s
    }

    pub fn vtk(&self, refined: bool) -> String {
        write_vtk(&self.output.visual_fields(refined), "eyeflow solution")
    }

    pub fn probe_csv(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_probe_csv(&self.probe, &mut buf).expect("writing to memory");
        buf
    }

    /// Write the VTK file, probe CSV, log and optionally the Jacobian and
    /// residual at the solution. Returns the paths written.
    pub fn write_files(&self, scenario: &Scenario, dir: &Path, dump_matrices: bool) -> Result<Vec<PathBuf>, StageError> {
        let o = &scenario.config.output;
        fs::create_dir_all(dir).map_err(at(Stage::Output))?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<(), StageError> {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| StageError { stage: Stage::Output, source: format!("{}: {e}", p.display()).into() })?;
            written.push(p);
            Ok(())
        };
        put(&o.vtk, self.vtk(o.refine_vtk).as_bytes())?;
        if !self.probe.is_empty() {
            put(&o.probe_csv, &self.probe_csv())?;
        }
        put(&o.log, self.summary().as_bytes())?;
        if dump_matrices {
            let x = &self.output.state;
            let sys = self.problem.jacobian(x).map_err(at(Stage::Output))?;
            let r = self.problem.residual(x).map_err(at(Stage::Output))?;
            let l = sys.layout;
            let note = format!(
                "coupled Jacobian at the solution; blocks u {:?}, p {:?}, T {:?}, lambda {:?}",
                l.u(),
                l.p(),
                l.t(),
                l.lambda()
            );
            put("jacobian.mtx", matrix_market(&sys.matrix, &note).as_bytes())?;
            put("residual.mtx", matrix_market_vector(&r, "coupled residual at the solution").as_bytes())?;
        }
        Ok(written)
    }
}
