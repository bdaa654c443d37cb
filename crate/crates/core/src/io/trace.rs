//! Trace CSV, one row per flow step, flushed as it is written.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::deformation::EnergyReport;
use crate::error::{Error, Result};
use crate::flow::TraceRow;

pub struct TraceWriter {
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", TraceRow::HEADER.join(","))?;
        out.flush()?;
        Ok(TraceWriter { out })
    }

    /// Appends a row and flushes it, so a killed run leaves a readable prefix.
    pub fn append(&mut self, r: &TraceRow) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.e_dirichlet,
            r.e_quad,
            r.k_integral,
            r.det_drift,
            r.interior_res,
            r.boundary_res,
            r.dt,
            r.accepted
        )?;
        self.out.flush()?;
        Ok(())
    }
}

/// Parses a trace file. A trailing partial line, as left by a killed run, is
/// ignored.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = fs::read_to_string(path)?;
    let bad = |msg: String| Error::BadConfig(format!("{}: {msg}", path.display()));
    let mut lines = text.split_inclusive('\n');
    let header = lines.next().unwrap_or("").trim_end();
    if header != TraceRow::HEADER.join(",") {
        return Err(bad("unexpected trace header".to_string()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if !line.ends_with('\n') {
            break;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != TraceRow::HEADER.len() {
            return Err(bad(format!("row {} has {} fields", rows.len() + 1, f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", rows.len() + 1)));
        rows.push(TraceRow {
            step: f[0].parse().map_err(|e| bad(format!("row {}: {e}", rows.len() + 1)))?,
            t: num(f[1])?,
            e_dirichlet: num(f[2])?,
            e_quad: num(f[3])?,
            k_integral: num(f[4])?,
            det_drift: num(f[5])?,
            interior_res: num(f[6])?,
            boundary_res: num(f[7])?,
            dt: num(f[8])?,
            accepted: f[9].parse().map_err(|e| bad(format!("row {}: {e}", rows.len() + 1)))?,
        });
    }
    Ok(rows)
}

pub const ENERGY_HEADER: &str = "e_dirichlet,e_quad,k_integral,det_drift";

/// One CSV row (without header) for an energy report.
pub fn energy_csv_row(e: &EnergyReport) -> String {
    format!("{},{},{},{}", e.e_dirichlet, e.e_quad, e.k_integral, e.det_drift)
}
