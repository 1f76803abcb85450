use std::path::PathBuf;

use eyeflow::config::Domain;
use eyeflow::gmsh::write_msh;
use eyeflow::vtk::read_vtk;
use eyeflow::{load_config, Scenario, ScenarioConfig, Stage};
use eyeflow_core::coupled::Posture;
use eyeflow_core::mesh::EyeGeometry;

fn coarse() -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/eye_default.conf");
    let mut c = load_config(&std::fs::read_to_string(path).unwrap()).unwrap();
    c.domain = Domain::Generated(EyeGeometry { h: 0.8e-3, ..Default::default() });
    c.output.probe_samples = 40;
    c
}

#[test]
fn stage_errors_are_labelled() {
    let mut c = coarse();
    c.params.mu = -1.0;
    let e = Scenario::prepare(c).unwrap_err();
    assert_eq!(e.stage, Stage::Config);
    assert!(e.to_string().starts_with("[config] "), "{e}");

    let e = Scenario::prepare(coarse().with_mesh(PathBuf::from("/nonexistent/eye.msh"))).unwrap_err();
    assert_eq!(e.stage, Stage::Mesh);
    assert!(e.to_string().contains("/nonexistent/eye.msh"), "{e}");

    let mut c = coarse();
    c.params.k_solid.retain(|(r, _)| r.to_string() != "lens");
    let s = Scenario::prepare(c).unwrap();
    let e = s.run().err().unwrap();
    assert_eq!(e.stage, Stage::Setup);
    assert!(e.to_string().contains("k_lens"), "{e}");

    for (stage, label) in [(Stage::Solve, "solve"), (Stage::Postprocess, "postprocess"), (Stage::Output, "output")] {
        assert_eq!(stage.to_string(), label);
    }
}

#[test]
fn coarse_standing_solve_writes_files() {
    let s = Scenario::prepare(coarse()).unwrap();
    let sol = s.run().unwrap();
    assert!(sol.converged());
    let eye = sol.eye.as_ref().unwrap();
    assert!(eye.hydrostatic.fluid.span_mmhg > 0.0);
    assert_eq!(sol.probe.len(), 40);

    let dir = tempfile::tempdir().unwrap();
    let written = sol.write_files(&s, dir.path(), true).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["solution.vtk", "probe.csv", "solve.log", "jacobian.mtx", "residual.mtx"]);

    let grid = read_vtk(&std::fs::read_to_string(dir.path().join("solution.vtk")).unwrap()).unwrap();
    assert_eq!(grid.cells.len(), s.mesh.n_cells());
    let t = grid.point_scalars("temperature_K").unwrap();
    assert!(t.iter().all(|&t| (306.0..=311.0).contains(&t)));

    let mut r = csv::Reader::from_path(dir.path().join("probe.csv")).unwrap();
    assert_eq!(r.records().count(), 40);

    let log = std::fs::read_to_string(dir.path().join("solve.log")).unwrap();
    assert!(log.contains("metrics max_speed_mps"));
    assert!(log.contains("eye hydrostatic fluid"));

    let jac = std::fs::read_to_string(dir.path().join("jacobian.mtx")).unwrap();
    let size = jac.lines().find(|l| !l.starts_with('%')).unwrap();
    let n = sol.output.state.values.len();
    assert!(size.starts_with(&format!("{n} {n} ")), "{size}");
    let res = std::fs::read_to_string(dir.path().join("residual.mtx")).unwrap();
    assert!(res.contains(&format!("\n{n} 1\n")));
}

#[test]
fn file_mesh_skips_eye_checks_and_probe() {
    let dir = tempfile::tempdir().unwrap();
    let generated = Scenario::prepare(coarse()).unwrap();
    let path = dir.path().join("eye.msh");
    std::fs::write(&path, write_msh(&generated.mesh).unwrap()).unwrap();
    let s = Scenario::prepare(coarse().with_mesh(path).with_posture(Posture::Prone)).unwrap();
    assert!(s.geometry.is_none());
    assert_eq!(s.probe_segment(), None);
    let sol = s.run().unwrap();
    assert!(sol.converged());
    assert!(sol.eye.is_none() && sol.probe.is_empty());
    assert!(sol.summary().contains("probe skipped"));
    let written = sol.write_files(&s, dir.path(), false).unwrap();
    assert_eq!(written.len(), 2);
}

#[test]
fn single_thread_runs_are_bit_identical() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let s = Scenario::prepare(coarse()).unwrap();
    let run = || {
        let sol = s.run().unwrap();
        (sol.vtk(false), sol.probe_csv(), sol.output.state.values.clone())
    };
    let a = pool.install(run);
    let b = pool.install(run);
    assert!(a == b);
}
