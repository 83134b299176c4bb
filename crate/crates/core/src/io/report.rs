//! CSV tables and the text summary of a run.
//!
//! Every CSV file starts with one comment line
//! `# schema=<id> model=<hash>` followed by a header row. Floats are written as
//! `{:.16e}` (17 significant digits), integers plainly, text verbatim.
//!
//! Schemas:
//!
//! | schema id                   | columns |
//! |-----------------------------|---------|
//! | `wbflow.trajectory.v1`      | step, t, x, rho, h, phi_star |
//! | `wbflow.diagnostics.v1`     | step, t, energy, quadratic_cost, boundary_flux, max_displacement, created_mass_l1, created_mass_linf, energy_rhs, kkt_residual, jko_residual, c_concavity_gap, barrier_margin, trace_gap |
//! | `wbflow.convergence.v1`     | tau, steps, error |
//! | `wbflow.profile.v1`         | x, rho_jko, rho_fd |
//! | `wbflow.audit.v1`           | id, pass, x, argument, value, note |
//! | `wbflow.verify.v1`          | suite, pass, worst, tolerance |
//!
//! In the trajectory layout, `h` and `phi_star` are `NaN` where undefined
//! (the initial datum, finite-difference rows).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format!("{f:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            Cell::Float(f)
        } else {
            Cell::Text(s.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(f) => Some(*f),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// File stem.
    pub name: String,
    pub schema: String,
    pub model_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(name: &str, schema: &str, model_hash: &str, columns: &[&str]) -> Self {
        CsvTable {
            name: name.into(),
            schema: schema.into(),
            model_hash: model_hash.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))?;
        Ok(format!("# schema={} model={}\n{body}", self.schema, self.model_hash))
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Io("empty CSV document".into()))?;
        let meta = first.strip_prefix("# ").ok_or_else(|| Error::Io("missing schema line".into()))?;
        let mut schema = String::new();
        let mut model_hash = String::new();
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("schema", v)) => schema = v.into(),
                Some(("model", v)) => model_hash = v.into(),
                _ => return Err(Error::Io(format!("unexpected header field '{kv}'"))),
            }
        }
        let mut r = csv::Reader::from_reader(rest.as_bytes());
        let columns = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(Cell::parse).collect());
        }
        Ok(CsvTable { name: name.into(), schema, model_hash, columns, rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Outcome of one run: summary lines, CSV tables and failed verification items.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub command: String,
    pub summary: Vec<String>,
    pub tables: Vec<CsvTable>,
    pub failures: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Writes every table to `<dir>/<name>.csv` (when `dir` is given) and returns the text summary.
pub fn emit_report(report: &RunReport, dir: Option<&Path>) -> Result<String> {
    let mut text = String::new();
    let _ = writeln!(text, "wbflow {}", report.command);
    for line in &report.summary {
        let _ = writeln!(text, "  {line}");
    }
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        for t in &report.tables {
            let path = dir.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.to_csv()?)?;
            let _ = writeln!(text, "  wrote {} ({} rows)", path.display(), t.rows.len());
        }
    }
    if report.failures.is_empty() {
        let _ = writeln!(text, "  status: ok");
    } else {
        for f in &report.failures {
            let _ = writeln!(text, "  FAILED: {f}");
        }
    }
    Ok(text)
}
