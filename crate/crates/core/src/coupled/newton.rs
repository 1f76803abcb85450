use alloc::vec::Vec;
use core::fmt;

use crate::math::norm2;
use crate::{Error, Result};

/// Outcome of one linearized solve `J δ = -r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStep {
    pub delta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations of an unpreconditioned comparison solve, when requested.
    pub reference_iterations: Option<usize>,
}

/// A square nonlinear system driven by [`newton`].
pub trait NonlinearSystem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Solve the linearization at `x` for the step, to absolute accuracy
    /// `atol` in the residual norm where possible.
    fn linear_step(&self, x: &[f64], r: &[f64], atol: f64) -> Result<LinearStep>;

    /// Row weights of the norm used for convergence; unweighted when `None`.
    /// `linear_step` measures its tolerance in the same norm.
    fn weights(&self) -> Option<&[f64]> {
        None
    }
}

/// `‖W r‖₂` for optional row weights `W`.
pub fn weighted_norm(r: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => crate::math::sqrt(r.iter().zip(w).map(|(a, b)| (a * b) * (a * b)).sum()),
        None => norm2(r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonControl {
    fn default() -> Self {
        NewtonControl { rtol: 1e-8, atol: 1e-12, max_iter: 30, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Residual norm after the step.
    pub residual: f64,
    pub step_length: f64,
    pub halvings: usize,
    pub linear_iterations: usize,
    pub linear_converged: bool,
    pub reference_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonReport {
    pub initial_residual: f64,
    pub target: f64,
    pub steps: Vec<StepInfo>,
    pub converged: bool,
    /// Iteration at which the line search found no decrease.
    pub stagnated_at: Option<usize>,
}

impl NewtonReport {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.steps.last().map_or(self.initial_residual, |s| s.residual)
    }

    /// Residual norms, starting with the initial one.
    pub fn residuals(&self) -> Vec<f64> {
        core::iter::once(self.initial_residual).chain(self.steps.iter().map(|s| s.residual)).collect()
    }

    /// `ρ_{k+1} / ρ_k²` for the residuals `ρ_k = r_k / r_0` normalized by the
    /// initial one, skipping steps that end below `floor` (the round-off
    /// regime, where the ratio says nothing about the Newton rate).
    pub fn quadratic_ratios(&self, floor: f64) -> Vec<f64> {
        let r0 = self.initial_residual;
        if r0 == 0.0 {
            return Vec::new();
        }
        self.residuals()
            .windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| (w[1] / r0) / ((w[0] / r0) * (w[0] / r0)))
            .collect()
    }

    /// Error for a run that stopped without converging.
    pub fn failure(&self) -> Option<Error> {
        if self.converged {
            None
        } else if let Some(it) = self.stagnated_at {
            Some(Error::LineSearchStagnation { iteration: it })
        } else {
            Some(Error::LinearSolve(alloc::format!(
                "Newton did not converge in {} iterations (residual {:.3e}, target {:.3e})",
                self.iterations(),
                self.final_residual(),
                self.target
            )))
        }
    }
}

impl fmt::Display for NewtonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "newton  iter  residual      step      halvings  linear_its  reference_its")?;
        writeln!(f, "newton  {:>4}  {:.6e}", 0, self.initial_residual)?;
        for (i, s) in self.steps.iter().enumerate() {
            let reference = s.reference_iterations.map_or_else(|| alloc::string::String::from("-"), |n| alloc::format!("{n}"));
            writeln!(
                f,
                "newton  {:>4}  {:.6e}  {:<8.4}  {:>8}  {:>10}{}  {:>13}",
                i + 1,
                s.residual,
                s.step_length,
                s.halvings,
                s.linear_iterations,
                if s.linear_converged { " " } else { "*" },
                reference
            )?;
        }
        write!(
            f,
            "newton  {} after {} iterations, residual {:.3e} (target {:.3e})",
            if self.converged { "converged" } else { "NOT converged" },
            self.iterations(),
            self.final_residual(),
            self.target
        )
    }
}

/// Damped Newton iteration with Armijo backtracking on the residual norm.
///
/// Stops when `‖r‖ ≤ rtol ‖r₀‖ + atol` in the system's weighted norm,
/// always taking at least one step.
/// A run that does not converge returns its best iterate with the report
/// flagged; only non-finite residuals and linear-solver errors are `Err`.
pub fn newton(sys: &dyn NonlinearSystem, x0: &[f64], ctl: &NewtonControl) -> Result<(Vec<f64>, NewtonReport)> {
    let mut x = x0.to_vec();
    let mut r = sys.residual(&x)?;
    let w = sys.weights();
    let mut rn = finite(weighted_norm(&r, w))?;
    let target = ctl.rtol * rn + ctl.atol;
    let mut report = NewtonReport { initial_residual: rn, target, ..Default::default() };
    for it in 1..=ctl.max_iter.max(1) {
        let step = sys.linear_step(&x, &r, 0.5 * target)?;
        let mut t = 1.0;
        let mut accepted = None;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64, usize)> = None;
        for h in 0..=ctl.max_halvings {
            let xt: Vec<f64> = x.iter().zip(&step.delta).map(|(a, d)| a + t * d).collect();
            let rt = sys.residual(&xt)?;
            let n = weighted_norm(&rt, w);
            if n.is_finite() {
                if n <= (1.0 - 1e-4 * t) * rn || n <= target {
                    accepted = Some((n, xt, rt, t, h));
                    break;
                }
                if best.as_ref().is_none_or(|b| n < b.0) {
                    best = Some((n, xt, rt, t, h));
                }
            }
            t *= 0.5;
        }
        let stagnated = accepted.is_none();
        let Some((n, xt, rt, t, h)) = accepted.or_else(|| best.filter(|b| b.0 < rn)) else {
            report.stagnated_at = Some(it);
            return Ok((x, report));
        };
        x = xt;
        r = rt;
        rn = n;
        report.steps.push(StepInfo {
            residual: rn,
            step_length: t,
            halvings: h,
            linear_iterations: step.iterations,
            linear_converged: step.converged,
            reference_iterations: step.reference_iterations,
        });
        if rn <= target {
            report.converged = true;
            return Ok((x, report));
        }
        if stagnated {
            report.stagnated_at = Some(it);
            return Ok((x, report));
        }
    }
    Ok((x, report))
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NotFinite("nonlinear residual"))
    }
}
