//! Space serialization: a CSV of atoms (`x0,..,x{D-1},weight,label`) plus a
//! JSON sidecar with metric kind, diameter and gluing data. Floats are
//! written with 17 significant digits, which round-trips exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Construction, Metric, MetricKind, Space};
use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.display().to_string()),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceMeta {
    pub dim: usize,
    pub points: usize,
    pub metric_kind: MetricKind,
    pub diameter: f64,
    pub glue_point: Option<Vec<f64>>,
    pub marked_points: Vec<Vec<f64>>,
    pub construction: Construction,
    pub nominal_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
}

pub fn space_meta(space: &Space) -> SpaceMeta {
    SpaceMeta {
        dim: space.dim(),
        points: space.len(),
        metric_kind: space.metric_kind(),
        diameter: space.diameter(),
        glue_point: space.glue_point().map(|g| g.to_vec()),
        marked_points: space.marked_points().to_vec(),
        construction: space.construction().clone(),
        nominal_dimension: space.nominal_dimension(),
        distances: match space.metric() {
            Metric::Explicit(m) => Some(m.as_ref().clone()),
            Metric::Euclidean => None,
        },
    }
}

/// Writes the atom CSV and its JSON sidecar.
pub fn write_space(space: &Space, csv_path: &Path) -> Result<()> {
    write_space_with_column(space, csv_path, None)
}

/// Like [`write_space`], appending one extra named column.
pub fn write_space_with_column(space: &Space, csv_path: &Path, extra: Option<(&str, &[String])>) -> Result<()> {
    if let Some((_, col)) = extra {
        if col.len() != space.len() {
            return Err(Error::argument("extra column length does not match atom count"));
        }
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    let mut header: Vec<String> = (0..space.dim()).map(|d| format!("x{d}")).collect();
    header.push("weight".into());
    header.push("label".into());
    if let Some((name, _)) = extra {
        header.push(name.to_string());
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..space.len() {
        row.clear();
        row.extend(space.point(i).iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(space.weights()[i]));
        row.push(space.label(i).unwrap_or("").to_string());
        if let Some((_, col)) = extra {
            row.push(col[i].clone());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    write_json(&sidecar_path(csv_path), &space_meta(space))
}

/// Reads a space written by [`write_space`]. Extra trailing columns are
/// returned by [`read_space_with_column`].
pub fn read_space(csv_path: &Path) -> Result<Space> {
    read_space_with_column(csv_path, None).map(|x| x.0)
}

pub fn read_space_with_column(csv_path: &Path, column: Option<&str>) -> Result<(Space, Option<Vec<String>>)> {
    let meta: SpaceMeta = read_json(&sidecar_path(csv_path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(open(csv_path)?));
    let headers = r.headers()?.clone();
    let dim = meta.dim;
    for d in 0..dim {
        if headers.get(d) != Some(format!("x{d}").as_str()) {
            return Err(Error::Parse(format!("expected column x{d}")));
        }
    }
    if headers.get(dim) != Some("weight") || headers.get(dim + 1) != Some("label") {
        return Err(Error::Parse("expected weight and label columns".into()));
    }
    let extra_at = match column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("missing column {name}")))?,
        ),
        None => None,
    };
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut labels = Vec::new();
    let mut extra = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        for d in 0..dim {
            coords.push(parse_f64(&rec[d])?);
        }
        weights.push(parse_f64(&rec[dim])?);
        labels.push(rec[dim + 1].to_string());
        if let Some(k) = extra_at {
            extra.push(rec.get(k).unwrap_or("").to_string());
        }
    }
    if weights.len() != meta.points {
        return Err(Error::Parse(format!(
            "sidecar promises {} atoms, CSV has {}",
            meta.points,
            weights.len()
        )));
    }
    let metric = match (meta.metric_kind, meta.distances) {
        (MetricKind::Euclidean, _) => Metric::Euclidean,
        (MetricKind::ExplicitMatrix, Some(d)) => Metric::Explicit(Arc::new(d)),
        (MetricKind::ExplicitMatrix, None) => {
            return Err(Error::Parse("explicit metric without a distance matrix".into()))
        }
    };
    let mut s = Space::assemble(dim, coords, weights, metric, meta.construction)?;
    if labels.iter().any(|l| !l.is_empty()) {
        s.set_labels(&labels)?;
    }
    if let Some(g) = meta.glue_point {
        s.set_glue_point(g);
    }
    s.set_marked(meta.marked_points);
    Ok((s, extra_at.map(|_| extra)))
}
