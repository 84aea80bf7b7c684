//! Multiscale energy profile of a piece indicator on two glued squares.
//! The profile should scale like `t^(n - p theta)` at small radii.

use besovlab::energy::{default_radii, ks_energy_tail, multiscale_energy, ScalingFit, DEFAULT_TAIL_FRACTION};
use besovlab::family::FamilyKind;
use besovlab::functions::FunctionSpec;

fn main() -> besovlab::Result<()> {
    let space = FamilyKind::GluedCubes { n: 2 }.build(4)?;
    let u = FunctionSpec::Indicator { label: "E1".into() }.generate(&space)?;
    let radii = default_radii(&space);
    let (p, theta) = (1.5, 0.8);

    let prof = multiscale_energy(&space, &u, p, theta, &radii)?;
    let (lo, hi) = (10.0 * space.min_spacing(), 0.1 * space.diameter());
    let (r, v): (Vec<f64>, Vec<f64>) = prof
        .radii
        .iter()
        .zip(&prof.values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .unzip();
    if let Some(fit) = ScalingFit::fit(&r, &v) {
        println!("slope {:.3} (expected {:.3}), r2 {:.4}", fit.alpha, 2.0 - p * theta, fit.r_squared);
    }
    let tail = ks_energy_tail(&prof, DEFAULT_TAIL_FRACTION)?;
    println!("tail class {:?}, besov {:?}", tail.class, prof.besov_pp);
    Ok(())
}
