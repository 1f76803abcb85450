use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use eyeflow::config::Domain;
use eyeflow::gmsh::write_msh;
use eyeflow::verify::{run_verify, Suite};
use eyeflow::{load_config, Scenario, ScenarioConfig, Stage, StageError};
use eyeflow_core::coupled::Posture;

#[derive(Parser)]
#[command(name = "eyeflow", version, about = "Aqueous-humor flow and heat transfer in an eye cross-section")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write VTK, probe CSV and a log.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the posture in the config.
        #[arg(long)]
        posture: Option<Posture>,
        /// Read this MSH 4.1 file instead of generating the mesh.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the Jacobian and residual at the solution.
        #[arg(long)]
        dump_matrices: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the configured mesh as MSH 4.1.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn read_config(path: &Path) -> Result<ScenarioConfig, StageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| StageError { stage: Stage::Config, source: format!("{}: {e}", path.display()).into() })?;
    load_config(&text).map_err(|e| StageError { stage: Stage::Config, source: format!("{}: {e}", path.display()).into() })
}

fn set_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn solve(
    config: &Path,
    posture: Option<Posture>,
    mesh: Option<PathBuf>,
    out: &Path,
    dump: bool,
) -> Result<ExitCode> {
    let mut cfg = read_config(config)?;
    if let Some(p) = posture {
        cfg = cfg.with_posture(p);
    }
    if let Some(m) = mesh {
        cfg = cfg.with_mesh(m);
    }
    let scenario = Scenario::prepare(cfg)?;
    println!(
        "mesh: {} vertices, {} cells, posture {}",
        scenario.mesh.n_vertices(),
        scenario.mesh.n_cells(),
        scenario.config.posture
    );
    let solution = scenario.run()?;
    print!("{}", solution.summary());
    for p in solution.write_files(&scenario, out, dump)? {
        println!("wrote {}", p.display());
    }
    Ok(if solution.converged() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn mesh(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = read_config(config)?;
    if let Domain::File(p) = &cfg.domain {
        eprintln!("note: re-writing the mesh read from {}", p.display());
    }
    let scenario = Scenario::prepare(cfg)?;
    let text = write_msh(&scenario.mesh).map_err(|e| StageError { stage: Stage::Output, source: e.into() })?;
    fs::write(out, text).map_err(|e| StageError { stage: Stage::Output, source: format!("{}: {e}", out.display()).into() })?;
    println!("wrote {} ({} vertices, {} cells)", out.display(), scenario.mesh.n_vertices(), scenario.mesh.n_cells());
    Ok(ExitCode::SUCCESS)
}

fn verify(suite: Suite, out: &Path) -> Result<ExitCode> {
    let report = run_verify(suite).context("verification run")?;
    print!("{}", report.table());
    fs::create_dir_all(out)?;
    let path = out.join("verify.csv");
    fs::write(&path, report.csv()?).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, posture, mesh: m, out, dump_matrices, threads } => {
            set_threads(threads).and_then(|_| solve(&config, posture, m, &out, dump_matrices))
        }
        Command::Mesh { config, out } => mesh(&config, &out),
        Command::Verify { suite, out, threads } => set_threads(threads).and_then(|_| verify(suite, &out)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
