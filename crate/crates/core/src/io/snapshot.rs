//! Map snapshots: CSV with one row per node, `i,j,x,y,phi1,phi2`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;

use crate::deformation::DiffeoMap;
use crate::error::{Error, Result};
use crate::grid::{Chart, ComplexField};

pub const SNAPSHOT_HEADER: &str = "i,j,x,y,phi1,phi2";

/// Writes `phi` with 17 significant digits, so reading it back is lossless.
pub fn write_snapshot(phi: &DiffeoMap<f64>, path: &Path) -> Result<()> {
    let chart = phi.source();
    let mut out = String::with_capacity(96 * chart.len());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for k in 0..chart.len() {
        let (i, j) = chart.position_of(k);
        let x = chart.node(k);
        let z = phi.values().get(k);
        out.push_str(&format!("{i},{j},{:.16e},{:.16e},{:.16e},{:.16e}\n", x[0], x[1], z.re, z.im));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a snapshot written for the chart `source`; the node coordinates in
/// the file must match the chart.
pub fn read_snapshot(path: &Path, source: Arc<Chart<f64>>, target: Arc<Chart<f64>>) -> Result<DiffeoMap<f64>> {
    let bad = |msg: String| Error::BadSnapshot(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read: {e}")))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SNAPSHOT_HEADER) {
        return Err(bad(format!("header must be `{SNAPSHOT_HEADER}`")));
    }
    let (nu, nv) = source.shape();
    let mut values: Vec<Option<Complex<f64>>> = vec![None; source.len()];
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(bad(format!("row {} has {} fields", row + 1, fields.len())));
        }
        let index = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("row {}: {e}", row + 1)));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", row + 1)));
        let (i, j) = (index(fields[0])?, index(fields[1])?);
        if i >= nu || j >= nv {
            return Err(bad(format!("node ({i}, {j}) outside a {nu}x{nv} grid")));
        }
        let k = source.index(i, j);
        let node = source.node(k);
        let (x, y) = (real(fields[2])?, real(fields[3])?);
        if (x - node[0]).abs() > 1e-9 || (y - node[1]).abs() > 1e-9 {
            return Err(bad(format!("node ({i}, {j}) is at ({x}, {y}), the chart has it at {node:?}")));
        }
        if values[k].replace(Complex::new(real(fields[4])?, real(fields[5])?)).is_some() {
            return Err(bad(format!("node ({i}, {j}) appears twice")));
        }
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(bad(format!("{missing} of {} nodes missing", source.len())));
    }
    let values = values.into_iter().map(|v| v.expect("checked above")).collect();
    DiffeoMap::new(source, target, ComplexField::from_vec(values)).map_err(|e| bad(e.to_string()))
}

/// Writes to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
