use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eyeflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eyeflow")).args(args).current_dir(cwd).output().unwrap()
}

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/eye_default.conf")
}

/// The shipped config with a coarser mesh.
fn coarse_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(shipped()).unwrap().replace("h = 0.4e-3", "h = 0.8e-3");
    let path = dir.join("coarse.conf");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bad_config_exits_one_with_stage_label() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "[physics]\nmu = 1e-3\nviscosity = 2\n").unwrap();
    let o = eyeflow(&["solve", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: [config] "), "{err}");
    assert!(err.contains("line 3") && err.contains("viscosity"), "{err}");

    let o = eyeflow(&["solve", "--config", "missing.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[config]"));
}

#[test]
fn missing_mesh_file_is_a_mesh_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let o = eyeflow(&["solve", "--config", cfg.to_str().unwrap(), "--mesh", "nope.msh"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[mesh]"), "{}", stderr(&o));
}

#[test]
fn unknown_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_ne!(eyeflow(&["verify", "--suite", "bogus"], dir.path()).status.code(), Some(0));
    assert_ne!(eyeflow(&["solve", "--config", "x", "--posture", "sideways"], dir.path()).status.code(), Some(0));
}

#[test]
fn mesh_then_solve_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let o = eyeflow(&["mesh", "--config", cfg.to_str().unwrap(), "--out", "eye.msh"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("eye.msh").exists());

    let o = eyeflow(
        &["solve", "--config", cfg.to_str().unwrap(), "--mesh", "eye.msh", "--posture", "supine", "--out", "run", "--threads", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("posture supine"), "{stdout}");
    assert!(dir.path().join("run/solution.vtk").exists());
    assert!(dir.path().join("run/solve.log").exists());
    assert!(!dir.path().join("run/probe.csv").exists());
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(coarse_config(dir.path())).unwrap().replace("newton_max_iter = 30", "newton_max_iter = 1");
    let cfg = dir.path().join("short.conf");
    std::fs::write(&cfg, text).unwrap();
    let o = eyeflow(&["solve", "--config", cfg.to_str().unwrap(), "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(dir.path().join("run/solution.vtk").exists());
}
