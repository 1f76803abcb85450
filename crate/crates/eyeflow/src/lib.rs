//! File formats, configuration and the scenario driver around
//! [`eyeflow_core`].
//!
//! * [`config`]: the `key = value` scenario file.
//! * [`gmsh`]: MSH 4.1 ASCII mesh input and output.
//! * [`vtk`]: legacy VTK output and a validating reader.
//! * [`output`]: probe CSV and Matrix Market dumps.
//! * [`scenario`]: the configured pipeline with stage-labelled errors.
//! * [`verify`]: the manufactured-solution and cavity suites.

pub mod config;
pub mod gmsh;
pub mod output;
pub mod scenario;
pub mod verify;
pub mod vtk;

pub use config::{load_config, ConfigError, ScenarioConfig};
pub use scenario::{Scenario, Solution, Stage, StageError};
