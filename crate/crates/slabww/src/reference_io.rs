//! Reference flux files: `t,cell_index,x_center,phi`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use slabww_core::driver::RunResult;
use slabww_core::reference::{ReferenceRow, ReferenceTable};
use slabww_core::ProblemSpec;

pub const HEADER: [&str; 4] = ["t", "cell_index", "x_center", "phi"];

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("cannot read reference {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("reference {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("reference {path}: {source}")]
    Table { path: String, source: slabww_core::Error },
}

#[derive(Deserialize)]
struct Row {
    t: f64,
    cell_index: usize,
    x_center: f64,
    phi: f64,
}

/// Loads and validates a reference table. The cell count is taken from the
/// first time layer.
pub fn load_reference(path: &Path) -> Result<ReferenceTable, ReferenceError> {
    let p = || path.display().to_string();
    let schema = |reason: String| ReferenceError::Schema { path: p(), reason };
    let file = File::open(path).map_err(|source| ReferenceError::Io { path: p(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    if let Some(missing) = HEADER.iter().find(|h| !header.iter().any(|c| c == **h)) {
        return Err(schema(format!("missing column `{missing}`")));
    }
    if header.iter().ne(HEADER) {
        return Err(schema(format!(
            "header must be `{}`, got `{}`",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.deserialize::<Row>().enumerate() {
        let r = rec.map_err(|e| schema(format!("data row {}: {e}", line + 1)))?;
        rows.push(ReferenceRow { t: r.t, cell_index: r.cell_index, x_center: r.x_center, phi: r.phi });
    }
    let cells = rows.iter().take_while(|r| rows.first().is_some_and(|f| f.t == r.t)).count();
    ReferenceTable::from_rows(&rows, cells.max(1), p()).map_err(|source| ReferenceError::Table { path: p(), source })
}

/// Writes census flux layers of `result` as a reference table, preceded by
/// the impulse layer at the first time point.
pub fn write_reference(path: &Path, spec: &ProblemSpec, result: &RunResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    let mesh = &spec.mesh;
    let source_cell = mesh.locate(spec.source.position).map_err(std::io::Error::other)?;
    let t0 = spec.time.t(0);
    for c in 0..mesh.cells() {
        let phi = if c == source_cell { spec.speed * spec.source.weight / mesh.width(c) } else { 0.0 };
        w.write_record(&[fmt(t0), c.to_string(), fmt(mesh.center(c)), fmt(phi)])?;
    }
    for rec in &result.records {
        for c in 0..mesh.cells() {
            w.write_record(&[fmt(rec.t), c.to_string(), fmt(mesh.center(c)), fmt(rec.census_phi[c])])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    File::create(path)?.write_all(&bytes)
}

fn fmt(v: f64) -> String {
    crate::output::format_value(v)
}
