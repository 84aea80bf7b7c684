//! Compares the profile of `u chi_E` with the profile restricted to `E`.

use besovlab::decompose::localization_check;
use besovlab::energy::default_radii;
use besovlab::family::FamilyKind;
use besovlab::functions::FunctionSpec;

fn main() -> besovlab::Result<()> {
    let space = FamilyKind::GluedCubes { n: 2 }.build(4)?;
    let e1 = space.indices_with_label("E1");
    let u = FunctionSpec::Coordinate { axis: 0, label: None }.generate(&space)?;
    let rep = localization_check(&space, &u, &e1, 1.5, 0.7, &default_radii(&space))?;
    println!("tail gap {:.4} over {} radii ({:?} / {:?})", rep.gap, rep.window, rep.lhs_tail, rep.rhs_tail);
    Ok(())
}
