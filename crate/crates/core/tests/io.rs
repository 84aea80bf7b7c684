use besovlab::decompose::{detect_components, read_decomposition, write_decomposition, DetectOptions};
use besovlab::energy::io::{read_profile, write_profile};
use besovlab::energy::{default_radii, multiscale_energy};
use besovlab::experiment::ExperimentConfig;
use besovlab::family::{FamilyKind, SpaceFamily};
use besovlab::functions::FunctionSpec;
use besovlab::space::io::{read_space, write_space};

#[test]
fn space_round_trip_keeps_geometry_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let s = FamilyKind::GluedGaskets { n: 2 }.build(3).unwrap();
    let path = dir.path().join("s.csv");
    write_space(&s, &path).unwrap();
    let t = read_space(&path).unwrap();
    assert_eq!(s.len(), t.len());
    assert_eq!(s.coords(), t.coords());
    assert_eq!(s.weights(), t.weights());
    assert_eq!(s.glue_point(), t.glue_point());
    assert_eq!(s.nominal_dimension(), t.nominal_dimension());
    assert!((0..s.len()).all(|i| s.label(i) == t.label(i)));
}

#[test]
fn profile_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = FamilyKind::Carpet.build(2).unwrap();
    let u = FunctionSpec::Coordinate { axis: 1, label: None }.generate(&s).unwrap();
    let prof = multiscale_energy(&s, &u, 2.0, 0.7, &default_radii(&s)).unwrap();
    let path = dir.path().join("p.csv");
    write_profile(&prof, &path, serde_json::json!({"note": "carpet"})).unwrap();
    let (back, _) = read_profile(&path).unwrap();
    assert_eq!(back.radii, prof.radii);
    assert_eq!(back.values, prof.values);
    assert_eq!(back.theta, prof.theta);
}

#[test]
fn decomposition_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fam = SpaceFamily::build(FamilyKind::GluedCubes { n: 1 }, &[3, 4, 5]).unwrap();
    let d = detect_components(&fam, 1.5, 0.5, &DetectOptions::default()).unwrap();
    let (csv, json) = (dir.path().join("d.csv"), dir.path().join("d.report.json"));
    write_decomposition(fam.finest(), &d, &csv, &json).unwrap();
    let (space, col, back) = read_decomposition(&csv, &json).unwrap();
    assert_eq!(space.len(), fam.finest().len());
    assert_eq!(col.len(), space.len());
    assert_eq!(back.components, d.components);
    assert_eq!(back.k, d.k);
}

#[test]
fn config_json_round_trip() {
    let cfg = ExperimentConfig::default();
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    let partial: ExperimentConfig = serde_json::from_str(r#"{"p": 2.0}"#).unwrap();
    assert_eq!(partial.levels, cfg.levels);
    assert_ne!(partial.hash(), cfg.hash());
}
