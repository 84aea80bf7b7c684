//! Largest smoothness exponent for which a candidate keeps bounded energy.

use besovlab::exponents::theta_p_estimate;
use besovlab::family::{FamilyKind, SpaceFamily};
use besovlab::functions::FunctionSpec;

fn main() -> besovlab::Result<()> {
    let fam = SpaceFamily::build(FamilyKind::Cube { n: 2 }, &[1, 2, 3])?;
    let cands = [FunctionSpec::Coordinate { axis: 0, label: None }];
    let grid: Vec<f64> = (0..=8).map(|i| 0.6 + 0.1 * i as f64).collect();
    let est = theta_p_estimate(&fam, 2.0, &cands, &grid)?;
    for row in &est.evidence {
        println!("theta {:.2}  slope {:+.3}  finite {}", row.theta, row.slope, row.finite);
    }
    println!("theta_p = {:?}", est.theta_p);
    Ok(())
}
