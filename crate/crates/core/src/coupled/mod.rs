//! The monolithic steady problem: Navier-Stokes with Boussinesq buoyancy on
//! the aqueous humor and heat conduction/advection on the whole section.
//!
//! Unknowns are ordered `[u, p, T, λ]`: P2 velocity and P1 pressure on the
//! fluid cells, P2 temperature everywhere and one multiplier fixing the
//! pressure mean.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::assembly::Coefficient;
use crate::mesh::{BoundaryTag, RegionTag};
use crate::{Error, Result};

mod newton;
mod problem;

pub use newton::{newton, weighted_norm, LinearStep, NewtonControl, NewtonReport, NonlinearSystem, StepInfo};
pub use problem::{
    fd_check, CoupledProblem, CoupledSolver, LinearMethod, LinearOptions, SchurKind, SolveOptions, Spaces,
    StateVector,
};

pub type ScalarFn = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Posture {
    Standing,
    Prone,
    Supine,
}

impl Posture {
    pub const ALL: [Posture; 3] = [Posture::Standing, Posture::Prone, Posture::Supine];

    pub fn name(self) -> &'static str {
        match self {
            Posture::Standing => "standing",
            Posture::Prone => "prone",
            Posture::Supine => "supine",
        }
    }
}

impl fmt::Display for Posture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Posture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Posture::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::InvalidParameter {
            name: "posture",
            reason: alloc::format!("`{s}` is not standing, prone or supine"),
        })
    }
}

/// Gravity vector for a posture. The x axis points posterior (the cornea is
/// at negative x) and y is vertical when standing.
pub fn posture_gravity(posture: Posture, g: f64) -> [f64; 2] {
    match posture {
        Posture::Standing => [0.0, -g],
        Posture::Prone => [-g, 0.0],
        Posture::Supine => [g, 0.0],
    }
}

/// Which temperature the ambient Robin condition relaxes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmbientReference {
    /// Ambient air temperature.
    #[default]
    TAmb,
    /// Blood temperature, as the combined condition is sometimes written.
    TBlVerbatim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub mu: f64,
    pub rho: f64,
    pub cp: f64,
    pub beta: f64,
    pub k_ah: f64,
    /// Conductivities of the solid regions.
    pub k_solid: Vec<(RegionTag, f64)>,
    pub g: f64,
    /// Unit gravity direction (zero vector allowed when `g` is zero).
    pub gravity_dir: [f64; 2],
    pub t_ref: f64,
    pub h_bl: f64,
    pub h_amb: f64,
    pub h_r: f64,
    /// Evaporative flux offset on the ambient surface, W/m².
    pub e: f64,
    pub t_bl: f64,
    pub t_amb: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            mu: 1e-3,
            rho: 1000.0,
            cp: 4178.0,
            beta: 3e-4,
            k_ah: 0.576,
            k_solid: Vec::new(),
            g: 9.81,
            gravity_dir: [0.0, -1.0],
            t_ref: 298.0,
            h_bl: 65.0,
            h_amb: 10.0,
            h_r: 6.0,
            e: 40.0,
            t_bl: 310.0,
            t_amb: 307.0,
        }
    }
}

impl PhysicalParams {
    pub fn gravity(&self) -> [f64; 2] {
        [self.g * self.gravity_dir[0], self.g * self.gravity_dir[1]]
    }

    pub fn set_posture(&mut self, posture: Posture) {
        self.gravity_dir = posture_gravity(posture, 1.0);
    }

    /// Conductivity of every region, the fluid included.
    pub fn conductivity(&self) -> Coefficient {
        let mut list = alloc::vec![(RegionTag::AqueousHumor, self.k_ah)];
        list.extend(self.k_solid.iter().copied().filter(|(r, _)| *r != RegionTag::AqueousHumor));
        Coefficient::PerRegion(list)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        for (name, v) in [("mu", self.mu), ("rho", self.rho), ("cp", self.cp), ("k_ah", self.k_ah)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, alloc::format!("must be positive, got {v}"));
            }
        }
        for (name, v) in [("beta", self.beta), ("g", self.g), ("h_bl", self.h_bl), ("h_amb", self.h_amb), ("h_r", self.h_r)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, alloc::format!("must be non-negative, got {v}"));
            }
        }
        for &(r, k) in &self.k_solid {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::NonPositiveCoefficient { region: r, value: k });
            }
        }
        for (name, v) in [("t_ref", self.t_ref), ("t_bl", self.t_bl), ("t_amb", self.t_amb), ("e", self.e)] {
            if !v.is_finite() {
                return bad(name, String::from("must be finite"));
            }
        }
        let n = crate::math::sqrt(self.gravity_dir[0] * self.gravity_dir[0] + self.gravity_dir[1] * self.gravity_dir[1]);
        if (n - 1.0).abs() > 1e-12 && !(n == 0.0 && self.g == 0.0) {
            return bad("gravity_dir", alloc::format!("must have unit norm, got {n}"));
        }
        Ok(())
    }
}

/// Temperature condition on one boundary tag.
#[derive(Clone)]
pub enum ThermalBc {
    /// Flux `h (T - t_ext) + flux` leaving the domain.
    Robin { h: f64, t_ext: f64, flux: f64 },
    Dirichlet(ScalarFn),
}

impl fmt::Debug for ThermalBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThermalBc::Robin { h, t_ext, flux } => {
                f.debug_struct("Robin").field("h", h).field("t_ext", t_ext).field("flux", flux).finish()
            }
            ThermalBc::Dirichlet(_) => f.write_str("Dirichlet(..)"),
        }
    }
}

/// The body-side and ambient-side exchange conditions of the eye.
pub fn eye_thermal_bcs(params: &PhysicalParams, ambient: AmbientReference) -> Vec<(BoundaryTag, ThermalBc)> {
    let t_ext = match ambient {
        AmbientReference::TAmb => params.t_amb,
        AmbientReference::TBlVerbatim => params.t_bl,
    };
    alloc::vec![
        (BoundaryTag::GammaBody, ThermalBc::Robin { h: params.h_bl, t_ext: params.t_bl, flux: 0.0 }),
        (BoundaryTag::GammaAmb, ThermalBc::Robin { h: params.h_amb + params.h_r, t_ext, flux: params.e }),
    ]
}

/// Volume sources and prescribed data beyond the physical model, used by
/// manufactured-solution tests. The default is the unforced problem with
/// no-slip walls and a zero pressure mean.
#[derive(Clone, Default)]
pub struct Forcing {
    pub momentum: Option<VectorFn>,
    pub heat: Option<ScalarFn>,
    /// Velocity on the fluid boundary; `None` means no-slip.
    pub velocity: Option<VectorFn>,
    /// Target value of the pressure integral over the fluid.
    pub pressure_integral: f64,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("momentum", &self.momentum.is_some())
            .field("heat", &self.heat.is_some())
            .field("velocity", &self.velocity.is_some())
            .field("pressure_integral", &self.pressure_integral)
            .finish()
    }
}

#[cfg(test)]
mod tests;
