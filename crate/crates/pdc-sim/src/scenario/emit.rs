//! CSV emission with embedded provenance, plus an optional gnuplot script.
//!
//! Output bytes are a pure function of the result: the comment block carries
//! the resolved configuration as one JSON line (no wall-clock fields), rows
//! print f64 values in shortest round-trip form.

use super::config::{ScanResult, ScanRow};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

pub fn write_csv<W: Write>(result: &ScanResult, mut w: W) -> std::io::Result<()> {
    let meta = serde_json::to_string(&result.metadata).expect("metadata serializes");
    writeln!(w, "# {meta}")?;
    writeln!(
        w,
        "{},g2_analytic,g2_montecarlo,std_error,k_effective,transmitted_power_fraction",
        result.control_name
    )?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.control,
            r.g2_analytic,
            r.g2_montecarlo,
            r.std_error,
            r.k_effective,
            r.transmitted_power_fraction
        )?;
    }
    Ok(())
}

/// Writes the result table to `path`.
pub fn emit(result: &ScanResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(result, &mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// In-memory CSV bytes, for determinism checks and tests.
pub fn csv_bytes(result: &ScanResult) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(result, &mut out).expect("in-memory write");
    out
}

/// Parses an emitted CSV back into the provenance JSON and the rows.
pub fn read_csv<R: BufRead>(r: R) -> Result<(serde_json::Value, String, Vec<ScanRow>)> {
    let mut lines = r.lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::Config("empty scan CSV".into()))?
        .map_err(|e| Error::io("<csv>", e))?;
    let meta_json = meta_line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Config("scan CSV must start with a # comment block".into()))?;
    let meta: serde_json::Value =
        serde_json::from_str(meta_json).map_err(|e| Error::Config(e.to_string()))?;
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("scan CSV missing header".into()))?
        .map_err(|e| Error::io("<csv>", e))?;
    let control_name = header
        .split(',')
        .next()
        .unwrap_or_default()
        .to_string();
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Config(format!(
                "scan CSV row has {} fields, expected 6",
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
        };
        rows.push(ScanRow {
            control: parse(fields[0])?,
            g2_analytic: parse(fields[1])?,
            g2_montecarlo: parse(fields[2])?,
            std_error: parse(fields[3])?,
            k_effective: parse(fields[4])?,
            transmitted_power_fraction: parse(fields[5])?,
        });
    }
    Ok((meta, control_name, rows))
}

/// Companion gnuplot script plotting the Monte-Carlo points with error bars
/// against the analytic curve.
pub fn gnuplot_script(result: &ScanResult, csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key left top\n\
         set xlabel '{x}'\n\
         set ylabel 'g2'\n\
         plot '{csv}' using 1:3:4 skip 2 with yerrorbars title 'monte carlo', \\\n\
         \x20    '{csv}' using 1:2 skip 2 with lines title 'analytic'\n",
        x = result.control_name,
        csv = csv_name,
    )
}

pub fn emit_gnuplot(result: &ScanResult, csv_path: &Path) -> Result<()> {
    let script_path = csv_path.with_extension("gp");
    let csv_name = csv_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv_path.display().to_string());
    std::fs::write(&script_path, gnuplot_script(result, &csv_name))
        .map_err(|e| Error::io(script_path.display().to_string(), e))?;
    Ok(())
}
