//! Profiles as `t,value` CSV with a JSON sidecar; functions as one-column CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ks_energy_tail, EnergyProfile, FunctionOnSpace, ScalingFit, TailClass, DEFAULT_TAIL_FRACTION};
use crate::error::{Error, Result};
use crate::space::io::{fmt_f64, open, parse_f64, read_json, sidecar_path, write_json};
use crate::space::Space;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub p: f64,
    pub theta: f64,
    pub besov_pp: Option<f64>,
    pub dyadic_sum: Option<f64>,
    pub dyadic_radii: Vec<f64>,
    pub fit: Option<ScalingFit>,
    pub tail_class: Option<TailClass>,
    pub tail_fraction: f64,
    /// Caller-supplied provenance such as config hash and seed.
    #[serde(default)]
    pub context: serde_json::Value,
}

pub fn write_profile(profile: &EnergyProfile, csv_path: &Path, context: serde_json::Value) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record(["t", "value"])?;
    for (t, v) in profile.radii.iter().zip(&profile.values) {
        w.write_record([fmt_f64(*t), fmt_f64(*v)])?;
    }
    w.flush()?;
    let tail = ks_energy_tail(profile, DEFAULT_TAIL_FRACTION).ok();
    let meta = ProfileMeta {
        p: profile.p,
        theta: profile.theta,
        besov_pp: profile.besov_pp,
        dyadic_sum: profile.dyadic_sum,
        dyadic_radii: profile.dyadic_radii.clone(),
        fit: tail.as_ref().and_then(|t| t.fit.clone()),
        tail_class: tail.map(|t| t.class),
        tail_fraction: DEFAULT_TAIL_FRACTION,
        context,
    };
    write_json(&sidecar_path(csv_path), &meta)
}

pub fn read_profile(csv_path: &Path) -> Result<(EnergyProfile, ProfileMeta)> {
    let meta: ProfileMeta = read_json(&sidecar_path(csv_path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(open(csv_path)?));
    if r.headers()?.iter().collect::<Vec<_>>() != ["t", "value"] {
        return Err(Error::Parse("profile CSV must have columns t,value".into()));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        radii.push(parse_f64(&rec[0])?);
        values.push(parse_f64(&rec[1])?);
    }
    let prof = EnergyProfile {
        p: meta.p,
        theta: meta.theta,
        radii,
        values,
        besov_pp: meta.besov_pp,
        dyadic_sum: meta.dyadic_sum,
        dyadic_radii: meta.dyadic_radii.clone(),
    };
    Ok((prof, meta))
}

pub fn write_function(u: &FunctionOnSpace, csv_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record(["value"])?;
    for v in u.values() {
        w.write_record([fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a one-column function file and binds it to `space`.
pub fn read_function(space: &Space, csv_path: &Path) -> Result<FunctionOnSpace> {
    let mut r = csv::Reader::from_reader(BufReader::new(open(csv_path)?));
    let mut values = Vec::new();
    for rec in r.records() {
        values.push(parse_f64(&rec?[0])?);
    }
    FunctionOnSpace::new(space, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{default_radii, multiscale_energy};
    use crate::space::make_cube_grid;

    #[test]
    fn profile_round_trip() {
        let q = make_cube_grid(2, 3, 3).unwrap();
        let u = FunctionOnSpace::from_fn(&q, |x, _| x[0].exp()).unwrap();
        let prof = multiscale_energy(&q, &u, 1.5, 0.6, &default_radii(&q)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_profile(&prof, &path, serde_json::json!({"seed": 7})).unwrap();
        let (back, meta) = read_profile(&path).unwrap();
        assert_eq!(back.values, prof.values);
        assert_eq!(back.radii, prof.radii);
        assert_eq!(back.besov_pp, prof.besov_pp);
        assert_eq!(meta.context["seed"], 7);
        let fpath = dir.path().join("u.csv");
        write_function(&u, &fpath).unwrap();
        assert_eq!(read_function(&q, &fpath).unwrap().values(), u.values());
    }
}
