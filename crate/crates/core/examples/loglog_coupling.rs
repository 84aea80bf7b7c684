//! Cross coupling around the glue point for the log-log witness.

use besovlab::energy::{cross_coupling_iks, default_radii, loglog_witness};
use besovlab::family::FamilyKind;

fn main() -> besovlab::Result<()> {
    let space = FamilyKind::GluedCubes { n: 2 }.build(5)?;
    let w = loglog_witness(&space)?;
    let radii = default_radii(&space);
    let iks = cross_coupling_iks(&space, &w, &w, 2.0, 1.0, &radii)?;
    for (r, v) in iks.radii.iter().zip(&iks.values).step_by(4) {
        println!("r {r:.4e}  I {v:.4e}");
    }
    Ok(())
}
