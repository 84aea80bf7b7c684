//! Drives the file-based pipeline from a config, as the command line does.

use besovlab::experiment::{cmd_gen, cmd_profile, cmd_report, ExperimentConfig, Overrides};
use besovlab::family::FamilyKind;

fn main() -> besovlab::Result<()> {
    let out = std::env::temp_dir().join("besovlab_example");
    let mut cfg = ExperimentConfig {
        family: FamilyKind::GluedCubes { n: 2 },
        levels: vec![2, 3],
        theta: vec![0.6, 0.8],
        ..ExperimentConfig::default()
    };
    cfg.apply(&Overrides { out: Some(out), jobs: Some(1), ..Overrides::default() });
    cfg.validate()?;
    println!("config hash {}", cfg.hash());

    for f in cmd_gen(&cfg)? {
        println!("space   {}", f.display());
    }
    println!("summary {}", cmd_profile(&cfg)?.display());
    println!("report  {}", cmd_report(&cfg)?.display());
    Ok(())
}
