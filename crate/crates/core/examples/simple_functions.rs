//! Reads a piecewise-constant function back as levels on disjoint sets.

use besovlab::decompose::{disjointify, simple_levels, SimpleOutcome};
use besovlab::energy::FunctionOnSpace;
use besovlab::family::FamilyKind;

fn main() -> besovlab::Result<()> {
    let space = FamilyKind::GluedCubes { n: 2 }.build(3)?;
    let f = FunctionOnSpace::from_fn(&space, |x, i| {
        let base = if space.label(i) == Some("E1") { 2.0 } else { -1.0 };
        base + 1e-9 * x[0]
    })?;
    match simple_levels(&space, &f, 1e-6, 1e-3)? {
        SimpleOutcome::Simple(form) => {
            println!("levels {:?}", form.levels);
            let pieces = disjointify(&space, &form.sets, 1e-3)?;
            println!("{} disjoint pieces, max deviation {:.2e}", pieces.len(), form.max_deviation);
        }
        SimpleOutcome::NotSimple { clusters, .. } => println!("not simple: {clusters} clusters"),
    }
    Ok(())
}
