//! Supremum-over-tail and Sobolev-type ratios for a smooth and a rough function.

use besovlab::energy::{default_radii, sobolev_ratio, wmax_ratio};
use besovlab::family::FamilyKind;
use besovlab::functions::FunctionSpec;

fn main() -> besovlab::Result<()> {
    let space = FamilyKind::Cube { n: 1 }.build(6)?;
    let radii = default_radii(&space);
    let fns = [
        FunctionSpec::Coordinate { axis: 0, label: None },
        FunctionSpec::BallIndicator { center: vec![0.5], radius: 0.3 },
    ];
    for f in &fns {
        let u = f.generate(&space)?;
        for theta in [0.4, 1.0] {
            let w = wmax_ratio(&space, &u, 2.0, theta, &radii)?;
            let s = sobolev_ratio(&space, &u, 2.0, theta, &radii)?;
            println!(
                "{:16} theta {theta}  wmax {:.3} ({:?})  sobolev {:.3} ({:?})",
                f.name(),
                w.ratio,
                w.flag,
                s.ratio,
                s.flag
            );
        }
    }
    Ok(())
}
