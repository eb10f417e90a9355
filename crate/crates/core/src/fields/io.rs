//! Field serialization: a one-line JSON header (keys: n, origin, extent,
//! cells, name) followed by node values as CSV, one value per line in
//! row-major order.

use super::{FieldError, GridDomain, ScalarField};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    origin: Vec<f64>,
    extent: Vec<f64>,
    cells: Vec<usize>,
    name: String,
}

pub fn save_scalar_field(path: &Path, field: &ScalarField, name: &str) -> Result<(), FieldError> {
    let header = Header {
        n: field.domain.n,
        origin: field.domain.origin.clone(),
        extent: field.domain.extent.clone(),
        cells: field.domain.cells.clone(),
        name: name.to_string(),
    };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header).map_err(|e| FieldError::BadFile(e.to_string()))?;
    writeln!(w)?;
    for v in &field.values {
        // 17 significant digits: round-trips f64 exactly
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn load_scalar_field(path: &Path) -> Result<(ScalarField, String), FieldError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let header: Header =
        serde_json::from_str(&first).map_err(|e| FieldError::BadFile(e.to_string()))?;
    let domain = GridDomain::new(header.n, &header.origin, &header.extent, &header.cells)?;
    let mut values = Vec::with_capacity(domain.node_count());
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(
            line.trim()
                .parse::<f64>()
                .map_err(|e| FieldError::BadFile(format!("bad value line: {e}")))?,
        );
    }
    let field = ScalarField::new(domain, values)?;
    Ok((field, header.name))
}
