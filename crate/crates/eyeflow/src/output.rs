//! Probe CSV and Matrix Market writers.

use std::fmt::Write as _;
use std::io;

use eyeflow_core::linsolve::CsrMatrix;
use eyeflow_core::postproc::ProbeSample;

pub const PROBE_HEADER: [&str; 6] = ["s", "x", "y", "T_K", "umag_mps", "p_mmHg"];

/// One row per sample; the pressure field is empty outside the fluid.
pub fn write_probe_csv<W: io::Write>(samples: &[ProbeSample], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_HEADER)?;
    for s in samples {
        let p = s.pressure_mmhg.map_or_else(String::new, |p| format!("{p:e}"));
        w.write_record([
            format!("{:e}", s.s),
            format!("{:e}", s.x),
            format!("{:e}", s.y),
            format!("{:e}", s.temperature),
            format!("{:e}", s.speed),
            p,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Matrix Market coordinate format, real general, 1-based indices.
pub fn matrix_market(m: &CsrMatrix, comment: &str) -> String {
    let mut s = String::with_capacity(40 * m.nnz() + 128);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    for line in comment.lines() {
        let _ = writeln!(s, "% {line}");
    }
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (j, v) in cols.iter().zip(vals) {
            let _ = writeln!(s, "{} {} {v:e}", i + 1, j + 1);
        }
    }
    s
}

/// Matrix Market dense array format for a column vector.
pub fn matrix_market_vector(v: &[f64], comment: &str) -> String {
    let mut s = String::with_capacity(24 * v.len() + 128);
    s.push_str("%%MatrixMarket matrix array real general\n");
    for line in comment.lines() {
        let _ = writeln!(s, "% {line}");
    }
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}
