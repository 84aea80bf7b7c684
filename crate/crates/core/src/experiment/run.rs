use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ExperimentConfig, RadiiSpec};
use crate::decompose::{irreducibility_verdict, write_decomposition, DetectOptions};
use crate::energy::io::write_profile;
use crate::energy::oracle::{naive_besov_pp, naive_profile, ORACLE_LIMIT};
use crate::energy::{
    besov_pinfty_energy, ks_energy_tail, multiscale_profiles, ProfileOptions, ScalingFit, DEFAULT_TAIL_FRACTION,
};
use crate::error::{Error, Result};
use crate::exponents::{
    build_graph, p_capacity, rho_p_estimate, theta_p_estimate, theta_p_star_estimate, CapacityResult, GraphFamily,
    ThetaStarOptions, DENSE_LIMIT, DENSITY_TOL,
};
use crate::family::{FamilyKind, SpaceFamily, FINITE_SLOPE};
use crate::functions::FunctionSpec;
use crate::numeric::{log_radii, rel_diff};
use crate::space::io::{fmt_f64, read_space, write_json, write_space};
use crate::space::{euclid, Space};

/// Pairwise Besov sums are skipped in profiles above this many atoms.
const BESOV_PROFILE_LIMIT: usize = 20_000;

fn provenance(cfg: &ExperimentConfig) -> Value {
    json!({
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "finite_slope": FINITE_SLOPE,
        "density_tol": DENSITY_TOL,
        "tail_fraction": DEFAULT_TAIL_FRACTION,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Resource { what, needed, budget } => Error::Resource {
            what: format!("{what} for {}", path.display()),
            needed,
            budget,
        },
        other => other,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| with_path(e.into(), path))
}

fn in_pool<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::argument(format!("worker pool: {e}")))?
            .install(f),
        None => f(),
    }
}

pub fn space_path(cfg: &ExperimentConfig, level: u32) -> PathBuf {
    cfg.out.join("spaces").join(format!("{}_L{level}.csv", cfg.family.name()))
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Writes every level of the configured family with its sidecar.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    in_pool(cfg, || {
        create_dir(&cfg.out.join("spaces"))?;
        let mut files = Vec::new();
        let mut entries = Vec::new();
        for &m in &cfg.levels {
            let path = space_path(cfg, m);
            let space = cfg.family.build(m).map_err(|e| with_path(e, &path))?;
            write_space(&space, &path).map_err(|e| with_path(e, &path))?;
            entries.push(json!({
                "level": m,
                "path": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                "points": space.len(),
                "mass": space.total_mass(),
            }));
            files.push(path);
        }
        let manifest = cfg.out.join("spaces").join("manifest.json");
        write_json(
            &manifest,
            &json!({"provenance": provenance(cfg), "family": cfg.family, "spaces": entries}),
        )?;
        Ok(files)
    })
}

fn radii_for(space: &Space, spec: &RadiiSpec) -> Vec<f64> {
    let t_max = spec.t_max.map_or(space.diameter(), |t| t.min(space.diameter()));
    log_radii(t_max, spec.min_spacings * space.min_spacing(), spec.per_decade)
}

fn default_functions(cfg: &ExperimentConfig) -> Vec<FunctionSpec> {
    if cfg.family.is_glued() {
        vec![FunctionSpec::Indicator { label: "E1".into() }]
    } else {
        vec![FunctionSpec::Coordinate { axis: 0, label: None }]
    }
}

/// One line of the profile summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub level: u32,
    pub points: usize,
    pub function: String,
    pub theta: f64,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub fit_points: usize,
    pub tail_alpha: Option<f64>,
    pub tail_class: String,
    pub besov_pp: Option<f64>,
    pub pinfty: f64,
    pub oracle_diff: Option<f64>,
}

/// Profiles every configured function on every generated level.
pub fn cmd_profile(cfg: &ExperimentConfig) -> Result<PathBuf> {
    in_pool(cfg, || {
        let dir = cfg.out.join("profiles");
        create_dir(&dir)?;
        let fns = if cfg.functions.is_empty() {
            default_functions(cfg)
        } else {
            cfg.functions.clone()
        };
        let mut rows = Vec::new();
        let mut notes = Vec::new();
        for &m in &cfg.levels {
            let path = space_path(cfg, m);
            if !path.exists() {
                return Err(Error::MissingArtifact(format!(
                    "{} (run gen first)",
                    path.display()
                )));
            }
            let space = read_space(&path).map_err(|e| with_path(e, &path))?;
            let radii = radii_for(&space, &cfg.radii);
            let opts = ProfileOptions {
                besov: space.len() <= BESOV_PROFILE_LIMIT,
                ..ProfileOptions::default()
            };
            let lo = cfg.fit_window.min_spacings * space.min_spacing();
            let hi = cfg.fit_window.max_fraction * space.diameter();
            let oracle = cfg.oracle && space.len() <= ORACLE_LIMIT;
            if cfg.oracle && !oracle {
                notes.push(format!("oracle skipped on level {m}: {} atoms", space.len()));
            }
            for f in &fns {
                let u = f.generate(&space)?;
                let profiles = multiscale_profiles(&space, &u, cfg.p, &cfg.theta, &radii, &opts)?;
                for prof in profiles {
                    let file = dir.join(format!(
                        "{}_L{m}_{}_t{}.csv",
                        cfg.family.name(),
                        slug(&f.name()),
                        prof.theta
                    ));
                    let ctx = json!({"provenance": provenance(cfg), "level": m, "function": f.name()});
                    write_profile(&prof, &file, ctx).map_err(|e| with_path(e, &file))?;
                    let (r, v): (Vec<f64>, Vec<f64>) = prof
                        .radii
                        .iter()
                        .zip(&prof.values)
                        .filter(|(&t, _)| t >= lo && t <= hi)
                        .map(|(a, b)| (*a, *b))
                        .unzip();
                    let fit = if r.len() >= 3 { ScalingFit::fit(&r, &v) } else { None };
                    let tail = ks_energy_tail(&prof, DEFAULT_TAIL_FRACTION).ok();
                    let oracle_diff = if oracle {
                        let naive = naive_profile(&space, &u, cfg.p, prof.theta, &prof.radii)?;
                        let mut d = naive
                            .iter()
                            .zip(&prof.values)
                            .map(|(a, b)| rel_diff(*a, *b))
                            .fold(0.0, f64::max);
                        if let Some(b) = prof.besov_pp {
                            d = d.max(rel_diff(naive_besov_pp(&space, &u, cfg.p, prof.theta)?, b));
                        }
                        Some(d)
                    } else {
                        None
                    };
                    rows.push(SummaryRow {
                        level: m,
                        points: space.len(),
                        function: f.name(),
                        theta: prof.theta,
                        slope: fit.as_ref().map(|f| f.alpha),
                        r_squared: fit.as_ref().map(|f| f.r_squared),
                        fit_points: fit.as_ref().map_or(0, |f| f.points),
                        tail_alpha: tail.as_ref().and_then(|t| t.fit.as_ref().map(|f| f.alpha)),
                        tail_class: tail.map_or_else(|| "unresolved".into(), |t| format!("{:?}", t.class).to_lowercase()),
                        besov_pp: prof.besov_pp,
                        pinfty: besov_pinfty_energy(&prof),
                        oracle_diff,
                    });
                }
            }
        }
        let summary = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&summary).map_err(|e| with_path(e.into(), &summary))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        write_json(
            &dir.join("summary.json"),
            &json!({"provenance": provenance(cfg), "rows": rows, "notes": notes}),
        )?;
        Ok(summary)
    })
}

fn default_capacity_levels(g: GraphFamily) -> Vec<u32> {
    match g {
        GraphFamily::Gasket { .. } => (1..=5).collect(),
        _ => (1..=4).collect(),
    }
}

fn default_candidates(cfg: &ExperimentConfig) -> Vec<FunctionSpec> {
    if cfg.family.is_glued() {
        vec![
            FunctionSpec::Indicator { label: "E1".into() },
            FunctionSpec::Coordinate {
                axis: 0,
                label: Some("E1".into()),
            },
            FunctionSpec::Coordinate { axis: 0, label: None },
        ]
    } else {
        vec![
            FunctionSpec::Coordinate { axis: 0, label: None },
            FunctionSpec::Harmonic { p: cfg.p },
        ]
    }
}

/// A cone over each piece, centred at its barycentre and reaching past its
/// far side, plus one coordinate.
fn default_targets(space: &Space) -> Vec<FunctionSpec> {
    let pieces: Vec<(Option<String>, Vec<usize>)> = if space.label_names().is_empty() {
        vec![(None, (0..space.len()).collect())]
    } else {
        space
            .label_names()
            .iter()
            .map(|l| (Some(l.clone()), space.indices_with_label(l)))
            .collect()
    };
    let w = space.weights();
    let mut out = Vec::new();
    for (label, idx) in &pieces {
        let mass: f64 = idx.iter().map(|&i| w[i]).sum();
        let center: Vec<f64> = (0..space.dim())
            .map(|d| idx.iter().map(|&i| w[i] * space.point(i)[d]).sum::<f64>() / mass)
            .collect();
        let reach = idx.iter().map(|&i| euclid(space.point(i), &center)).fold(0.0, f64::max);
        out.push(FunctionSpec::Cone {
            center,
            radius: 1.4 * reach,
            label: label.clone(),
        });
    }
    out.push(FunctionSpec::Coordinate {
        axis: space.dim() - 1,
        label: pieces[0].0.clone(),
    });
    out
}

/// `levels` shifted down until the finest space fits the dense kernel.
fn theta_star_levels(kind: FamilyKind, levels: &[u32]) -> Result<Vec<u32>> {
    let mut shift = 0;
    loop {
        let ls: Vec<u32> = levels.iter().filter(|&&m| m > shift).map(|&m| m - shift).collect();
        if ls.len() < 2 {
            return Err(Error::Resolution(
                "no pair of levels fits the dense projection kernel".into(),
            ));
        }
        let finest = kind.build(*ls.last().expect("nonempty"))?;
        if finest.len() <= DENSE_LIMIT {
            return Ok(ls);
        }
        shift += 1;
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn strip(mut v: Value, key: &str) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove(key);
    }
    v
}

/// Capacities with scaling factor, then both critical exponents.
pub fn cmd_exponents(cfg: &ExperimentConfig) -> Result<PathBuf> {
    in_pool(cfg, || {
        let dir = cfg.out.join("exponents");
        create_dir(&dir)?;
        let ex = &cfg.exponents;
        let mut report = json!({"provenance": provenance(cfg), "family": cfg.family, "p": cfg.p});
        let mut theta_p = None;
        let mut theta_star = None;
        if ex.rho {
            let g = cfg.family.graph_family();
            let levels = if ex.capacity_levels.is_empty() {
                default_capacity_levels(g)
            } else {
                ex.capacity_levels.clone()
            };
            let results: Vec<CapacityResult> = levels
                .par_iter()
                .map(|&m| p_capacity(&build_graph(g, m)?, cfg.p, &ex.capacity))
                .collect::<Result<_>>()?;
            let est = rho_p_estimate(&results, g)?;
            let path = dir.join("capacities.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| with_path(e.into(), &path))?;
            w.write_record(["level", "capacity", "ratio", "iterations", "gradient_norm"])?;
            for (i, r) in results.iter().enumerate() {
                let ratio = if i == 0 { String::new() } else { fmt_f64(est.ratios[i - 1]) };
                w.write_record([
                    r.level.to_string(),
                    fmt_f64(r.capacity),
                    ratio,
                    r.iterations.to_string(),
                    fmt_f64(r.gradient_norm),
                ])?;
            }
            w.flush()?;
            report["rho"] = serde_json::to_value(&est)?;
        }
        if ex.theta_p {
            let fam = SpaceFamily::build(cfg.family, &cfg.levels)?;
            let cands = if ex.candidates.is_empty() {
                default_candidates(cfg)
            } else {
                ex.candidates.clone()
            };
            let est = theta_p_estimate(&fam, cfg.p, &cands, &ex.theta_grid.values()?)?;
            let path = dir.join("theta_p_evidence.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| with_path(e.into(), &path))?;
            w.write_record(["theta", "candidate", "energies", "slope", "raw_slope", "finite"])?;
            for r in &est.evidence {
                w.write_record([
                    fmt_f64(r.theta),
                    r.candidate.clone(),
                    join(&r.energies),
                    fmt_f64(r.slope),
                    fmt_f64(r.raw_slope),
                    r.finite.to_string(),
                ])?;
            }
            w.flush()?;
            theta_p = est.theta_p;
            report["theta_p"] = strip(serde_json::to_value(&est)?, "evidence");
        }
        if ex.theta_p_star {
            let levels = match &ex.theta_star_levels {
                Some(l) => l.clone(),
                None => theta_star_levels(cfg.family, &cfg.levels)?,
            };
            let fam = SpaceFamily::build(cfg.family, &levels)?;
            let targets = if ex.targets.is_empty() {
                default_targets(fam.finest())
            } else {
                ex.targets.clone()
            };
            let opts = ThetaStarOptions {
                eps_grid: ex.eps_grid.clone(),
                projection: ex.projection.clone(),
                stop_at_failure: true,
            };
            let est = theta_p_star_estimate(&fam, cfg.p, &targets, &ex.theta_star_grid.values()?, &opts)?;
            let path = dir.join("theta_star_evidence.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| with_path(e.into(), &path))?;
            w.write_record(["theta", "target", "eps", "energies", "slope", "certified", "error"])?;
            for r in &est.evidence {
                w.write_record([
                    fmt_f64(r.theta),
                    r.target.clone(),
                    r.eps.map_or_else(|| "mean".into(), |e| fmt_f64(e)),
                    join(&r.energies),
                    fmt_f64(r.slope),
                    r.certified.to_string(),
                    fmt_f64(r.error),
                ])?;
            }
            w.flush()?;
            theta_star = est.theta_p_star;
            report["theta_p_star"] = strip(serde_json::to_value(&est)?, "evidence");
            report["targets"] = serde_json::to_value(&targets)?;
        }
        if let (Some(a), Some(b)) = (theta_star, theta_p) {
            report["ordered"] = json!(a <= b);
        }
        let path = dir.join("report.json");
        write_json(&path, &report)?;
        Ok(path)
    })
}

/// Component detection with certificates and the irreducibility verdict.
pub fn cmd_decompose(cfg: &ExperimentConfig) -> Result<PathBuf> {
    in_pool(cfg, || {
        let dir = cfg.out.join("decompose");
        create_dir(&dir)?;
        let fam = SpaceFamily::build(cfg.family, &cfg.levels)?;
        let theta = cfg.decompose.theta.unwrap_or(cfg.theta[0]);
        let opts = DetectOptions {
            k_max: cfg.decompose.k_max,
            search_level: cfg.decompose.search_level,
            seed: cfg.seed,
            ..DetectOptions::default()
        };
        let witnesses = (!cfg.decompose.witnesses.is_empty()).then_some(cfg.decompose.witnesses.as_slice());
        let v = irreducibility_verdict(&fam, cfg.p, theta, witnesses, &opts)?;
        let finest_level = *cfg.levels.last().expect("validated");
        let csv = dir.join(format!("{}_L{finest_level}.csv", cfg.family.name()));
        let d = &v.decomposition;
        write_decomposition(fam.finest(), d, &csv, &dir.join("decomposition.json"))
            .map_err(|e| with_path(e, &csv))?;
        let path = dir.join("verdict.json");
        write_json(
            &path,
            &json!({
                "provenance": provenance(cfg),
                "family": cfg.family,
                "p": cfg.p,
                "theta": theta,
                "verdict": v.verdict,
                "k": d.k,
                "masses": d.masses,
                "residual_mass": d.residual_mass,
                "certificates": d.certificates,
                "witnesses": v.witnesses,
                "borderline": v.borderline,
                "notes": d.notes,
            }),
        )?;
        Ok(path)
    })
}

fn read_value(path: &Path) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| with_path(e.into(), path))?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn fmt_opt(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| format!("{x:.4}")),
        other => other.to_string(),
    }
}

/// Collects the artifacts already in the output directory into
/// `report.json` and `report.md`.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let spaces = read_value(&cfg.out.join("spaces").join("manifest.json"))?;
    let profiles = read_value(&cfg.out.join("profiles").join("summary.json"))?;
    let exponents = read_value(&cfg.out.join("exponents").join("report.json"))?;
    let verdict = read_value(&cfg.out.join("decompose").join("verdict.json"))?;
    if spaces.is_none() && profiles.is_none() && exponents.is_none() && verdict.is_none() {
        return Err(Error::MissingArtifact(format!(
            "no artifacts under {}",
            cfg.out.display()
        )));
    }
    let mut md = String::new();
    let _ = writeln!(md, "# {} (p = {})\n", cfg.family.name(), cfg.p);
    let _ = writeln!(md, "config hash `{}`, seed {}\n", cfg.hash(), cfg.seed);
    if let Some(s) = &spaces {
        let _ = writeln!(md, "## Spaces\n\n| level | points | mass |\n|---|---|---|");
        for e in s["spaces"].as_array().into_iter().flatten() {
            let _ = writeln!(md, "| {} | {} | {} |", e["level"], e["points"], fmt_opt(&e["mass"]));
        }
        md.push('\n');
    }
    if let Some(p) = &profiles {
        let _ = writeln!(
            md,
            "## Profiles\n\n| level | function | theta | slope | r2 | tail | oracle |\n|---|---|---|---|---|---|---|"
        );
        for r in p["rows"].as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r["level"],
                r["function"].as_str().unwrap_or(""),
                fmt_opt(&r["theta"]),
                fmt_opt(&r["slope"]),
                fmt_opt(&r["r_squared"]),
                r["tail_class"].as_str().unwrap_or(""),
                fmt_opt(&r["oracle_diff"])
            );
        }
        md.push('\n');
    }
    if let Some(e) = &exponents {
        let _ = writeln!(md, "## Exponents\n");
        let _ = writeln!(md, "- rho_p: {}", fmt_opt(&e["rho"]["rho_p"]));
        let _ = writeln!(md, "- walk dimension: {}", fmt_opt(&e["rho"]["walk_dimension"]));
        let _ = writeln!(md, "- theta_p: {}", fmt_opt(&e["theta_p"]["theta_p"]));
        let _ = writeln!(md, "- theta_p*: {}\n", fmt_opt(&e["theta_p_star"]["theta_p_star"]));
    }
    if let Some(v) = &verdict {
        let _ = writeln!(md, "## Decomposition\n");
        let _ = writeln!(md, "- verdict: {}", v["verdict"]["verdict"].as_str().unwrap_or("?"));
        let _ = writeln!(md, "- k: {}", v["k"]);
        let _ = writeln!(md, "- masses: {}\n", v["masses"]);
    }
    let json_path = cfg.out.join("report.json");
    write_json(
        &json_path,
        &json!({
            "provenance": provenance(cfg),
            "spaces": spaces,
            "profiles": profiles,
            "exponents": exponents,
            "decompose": verdict,
        }),
    )?;
    let md_path = cfg.out.join("report.md");
    fs::write(&md_path, md).map_err(|e| with_path(e.into(), &md_path))?;
    Ok(md_path)
}
