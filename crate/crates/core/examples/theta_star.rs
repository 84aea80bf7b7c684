//! Density exponent: how far penalized projections with bounded energy can
//! approximate Lipschitz targets.

use besovlab::exponents::{theta_p_star_estimate, ThetaStarOptions};
use besovlab::family::{FamilyKind, SpaceFamily};
use besovlab::functions::FunctionSpec;

fn main() -> besovlab::Result<()> {
    let fam = SpaceFamily::build(FamilyKind::Cube { n: 2 }, &[1, 2, 3])?;
    let targets = [FunctionSpec::Cone { center: vec![0.5, 0.5], radius: 0.6, label: None }];
    let grid = [0.6, 0.8, 1.0, 1.2];
    let est = theta_p_star_estimate(&fam, 2.0, &targets, &grid, &ThetaStarOptions::default())?;
    for (t, d) in &est.distances {
        println!("theta {t:.2}  D {d:.4}");
    }
    println!("theta_p* = {:?}", est.theta_p_star);
    Ok(())
}
