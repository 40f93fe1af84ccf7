//! CSV file formats: complex matrices as `row,col,re,im`, solver traces, and atomic writes.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, CsiError, Result};
use crate::linalg::CMat;
use crate::report::TraceRow;

pub fn write_complex_csv<W: Write>(out: W, m: &CMat) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "re", "im"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_record([i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_complex_csv`]; the shape is inferred from the largest indices and
/// every entry must appear exactly once.
pub fn read_complex_csv<R: Read>(input: R) -> Result<CMat> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["row", "col", "re", "im"] {
        return Err(invalid(format!("unexpected complex CSV header {headers:?}")));
    }
    let mut entries = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| invalid(format!("record {}: bad {what}", line + 1));
        let r: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("row"))?;
        let c: usize = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("col"))?;
        let re: f64 = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("re"))?;
        let im: f64 = rec.get(3).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("im"))?;
        entries.push((r, c, Complex64::new(re, im)));
    }
    let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != rows * cols {
        return Err(invalid(format!(
            "{} entries cannot fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let mut m = CMat::zeros(rows, cols);
    let mut seen = vec![false; rows * cols];
    for (r, c, z) in entries {
        if std::mem::replace(&mut seen[r * cols + c], true) {
            return Err(invalid(format!("duplicate entry ({r}, {c})")));
        }
        m[(r, c)] = z;
    }
    Ok(m)
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "objective", "residual", "merit", "penalty"])?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            row.objective.to_string(),
            row.residual.to_string(),
            row.merit.to_string(),
            row.penalty.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write through a temp file in the destination directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CsiError::Io(e.error))?;
    Ok(())
}
