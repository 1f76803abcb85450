//! The `verify` suites: manufactured solutions and the heated cavity.

use std::fmt::Write as _;
use std::str::FromStr;

use eyeflow_core::verification::{run_cavity_benchmark, run_mms, CavityResult, MmsCase, MmsTable, CAVITY_LITERATURE_NU};

pub const MMS_LEVELS: [usize; 3] = [8, 16, 32];
pub const CAVITY_SIZES: [usize; 3] = [8, 16, 32];
pub const MIN_ORDER_U: f64 = 2.7;
pub const MIN_ORDER_P: f64 = 1.7;
pub const MIN_ORDER_T: f64 = 2.7;
/// Allowed deviation of the coarse cavity level from the extrapolated value.
pub const CAVITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mms,
    Cavity,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mms" => Ok(Suite::Mms),
            "cavity" => Ok(Suite::Cavity),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}`, expected mms, cavity or all")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub mms: Option<MmsTable>,
    pub cavity: Vec<CavityResult>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Plain-text tables followed by one line per check.
    pub fn table(&self) -> String {
        let mut s = String::new();
        if let Some(t) = &self.mms {
            let _ = writeln!(s, "{t}");
        }
        for c in &self.cavity {
            let _ = writeln!(s, "{c}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "{:<4} {:<28} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }

    /// Long-format CSV: `suite,case,level,quantity,value`.
    pub fn csv(&self) -> csv::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "case", "level", "quantity", "value"])?;
        if let Some(t) = &self.mms {
            let orders = t.orders();
            for (i, l) in t.levels.iter().enumerate() {
                let level = format!("{:e}", l.h);
                let mut rows = vec![
                    ("err_u", l.errors.u),
                    ("err_p", l.errors.p),
                    ("err_t", l.errors.t),
                    ("newton_iterations", l.newton_iterations as f64),
                ];
                if i > 0 {
                    let o = orders[i - 1];
                    rows.extend([("order_u", o.u), ("order_p", o.p), ("order_t", o.t)]);
                }
                for (q, v) in rows {
                    w.write_record(["mms", t.case, &level, q, &format!("{v:e}")])?;
                }
            }
        }
        for c in &self.cavity {
            let case = format!("Ra={:e} Pr={}", c.rayleigh, c.prandtl);
            for l in &c.levels {
                let level = l.n.to_string();
                for (q, v) in [
                    ("nu_hot", l.nu_hot),
                    ("nu_cold", l.nu_cold),
                    ("max_speed", l.max_speed),
                    ("newton_iterations", l.newton_iterations as f64),
                ] {
                    w.write_record(["cavity", &case, &level, q, &format!("{v:e}")])?;
                }
            }
            for (q, v) in [("nu_reference", c.reference), ("observed_order", c.observed_order)] {
                w.write_record(["cavity", &case, "extrapolated", q, &format!("{v:e}")])?;
            }
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

/// Manufactured-solution orders on the unit square.
pub fn mms_suite(report: &mut VerifyReport) -> eyeflow_core::Result<()> {
    let table = run_mms(&MmsCase::coupled(), &MMS_LEVELS)?;
    let o = table.final_orders().expect("three levels give orders");
    report.checks.push(check("mms order u", o.u >= MIN_ORDER_U, format!("{:.3} (min {MIN_ORDER_U})", o.u)));
    report.checks.push(check("mms order p", o.p >= MIN_ORDER_P, format!("{:.3} (min {MIN_ORDER_P})", o.p)));
    report.checks.push(check("mms order T", o.t >= MIN_ORDER_T, format!("{:.3} (min {MIN_ORDER_T})", o.t)));
    report.mms = Some(table);
    Ok(())
}

/// Largest relative hot/cold Nusselt mismatch over the levels.
fn balance(c: &CavityResult) -> f64 {
    c.levels.iter().map(|l| (l.nu_hot - l.nu_cold).abs() / l.nu_hot).fold(0.0, f64::max)
}

/// The Ra = 1e3 cavity at Pr 0.71 against its own extrapolation, plus the
/// water-like Pr 7 case checked for convergence and energy balance only.
pub fn cavity_suite(report: &mut VerifyReport) -> eyeflow_core::Result<()> {
    let air = run_cavity_benchmark(1e3, 0.71, &CAVITY_SIZES)?;
    let err = air.relative_error();
    report.checks.push(check(
        "cavity Nu vs extrapolation",
        err <= CAVITY_TOLERANCE,
        format!("n = {}: {:.6} vs {:.6} ({:.3}%)", air.levels[0].n, air.levels[0].nu_hot, air.reference, 100.0 * err),
    ));
    let lit = (air.reference - CAVITY_LITERATURE_NU).abs() / CAVITY_LITERATURE_NU;
    report.checks.push(check(
        "cavity Nu vs literature",
        lit <= CAVITY_TOLERANCE,
        format!("{:.6} vs {CAVITY_LITERATURE_NU} ({:.3}%)", air.reference, 100.0 * lit),
    ));
    report.checks.push(check("cavity monotone refinement", air.monotone(), format!("observed order {:.2}", air.observed_order)));
    let worst = balance(&air);
    report.checks.push(check("cavity energy balance", worst <= 1e-6, format!("max |Nu_hot - Nu_cold| / Nu = {worst:.2e}")));
    report.cavity.push(air);
    let water = run_cavity_benchmark(1e3, 7.0, &CAVITY_SIZES)?;
    let worst = balance(&water);
    report.checks.push(check("cavity Pr 7 converges", worst <= 1e-6, format!("Nu {:.6}, balance {worst:.2e}", water.reference)));
    report.cavity.push(water);
    Ok(())
}

pub fn run_verify(suite: Suite) -> eyeflow_core::Result<VerifyReport> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Mms | Suite::All) {
        mms_suite(&mut report)?;
    }
    if matches!(suite, Suite::Cavity | Suite::All) {
        cavity_suite(&mut report)?;
    }
    Ok(report)
}
