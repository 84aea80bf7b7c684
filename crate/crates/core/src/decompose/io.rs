use std::path::Path;

use super::Decomposition;
use crate::error::{Error, Result};
use crate::space::io::{read_json, sidecar_path, write_json};
use crate::space::io::{read_space_with_column, write_space_with_column};
use crate::space::Space;

const COLUMN: &str = "component";

/// Writes the space CSV with a `component` column (`C1`, `C2`, ... or
/// `residual`) and the JSON report.
pub fn write_decomposition(space: &Space, d: &Decomposition, csv_path: &Path, report_path: &Path) -> Result<()> {
    if d.components.iter().flatten().any(|&i| i >= space.len()) {
        return Err(Error::Binding("decomposition does not match the space".into()));
    }
    if sidecar_path(csv_path) == report_path {
        return Err(Error::Binding(format!("report path {} is the space sidecar", report_path.display())));
    }
    let col: Vec<String> = d
        .assignment(space.len())
        .into_iter()
        .map(|a| a.map_or_else(|| "residual".to_string(), |c| format!("C{}", c + 1)))
        .collect();
    write_space_with_column(space, csv_path, Some((COLUMN, &col)))?;
    write_json(report_path, d)
}

/// Reads back the space, its component column and the report.
pub fn read_decomposition(csv_path: &Path, report_path: &Path) -> Result<(Space, Vec<String>, Decomposition)> {
    let (space, col) = read_space_with_column(csv_path, Some(COLUMN))?;
    let d: Decomposition = read_json(report_path)?;
    Ok((space, col.expect("column requested"), d))
}
