//! Result tables and their CSV/JSON files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

/// Provenance stamped on every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub catalog_version: u32,
    /// The figure this experiment mirrors.
    pub figure: String,
    /// Every way the run departs from the reference setup.
    pub deviations: Vec<String>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub toolkit_version: String,
    pub settings: Value,
    pub sweep_variable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// JSON for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl ResultTable {
    pub fn is_rectangular(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.columns.len())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write<W: Write>(&self, out: W, format: Format) -> Result<()> {
        if !self.is_rectangular() {
            return Err(HarnessError::Config("table rows differ in length from the header".into()));
        }
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, self).map_err(|e| HarnessError::Io(e.to_string()))?;
                out.write_all(b"\n")?;
                Ok(())
            }
        }
    }

    /// Header row, then one line per row. Numbers use the shortest text
    /// that parses back to the same `f64`.
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_number(x))).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path, format: Format) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", path.display())))?;
        self.write(std::io::BufWriter::new(file), format)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid table JSON: {e}")))
    }
}

/// Shortest round-trip decimal form of `x`; `NaN`, `inf` and `-inf` for
/// non-finite values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        serde_json::Number::from_f64(x).expect("finite").to_string()
    }
}

/// Reads a CSV written by [`ResultTable::write`] back into columns and rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: String| HarnessError::Config(format!("invalid result CSV: {e}"));
    let columns = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(rec.iter().map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")))).collect::<Result<Vec<_>>>()?);
    }
    Ok((columns, rows))
}
