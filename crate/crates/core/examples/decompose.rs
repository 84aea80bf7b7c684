//! Finds the two pieces of a glued space and certifies them, then checks a
//! single square is irreducible.

use besovlab::decompose::{irreducibility_verdict, DetectOptions, Verdict};
use besovlab::family::{FamilyKind, SpaceFamily};

fn main() -> besovlab::Result<()> {
    let glued = SpaceFamily::build(FamilyKind::GluedCubes { n: 2 }, &[2, 3, 4])?;
    let rep = irreducibility_verdict(&glued, 1.5, 1.2, None, &DetectOptions::default())?;
    let d = &rep.decomposition;
    println!("glued squares: {:?}, k = {}, masses {:?}", rep.verdict, d.k, d.masses);
    for (i, c) in d.certificates.iter().enumerate() {
        println!("  C{}: level slope {:.3}, tail alpha {:?}", i + 1, c.level_slope, c.tail_alpha);
    }

    let square = SpaceFamily::build(FamilyKind::Cube { n: 2 }, &[2, 3, 4])?;
    let rep = irreducibility_verdict(&square, 2.0, 1.0, None, &DetectOptions::default())?;
    assert!(matches!(rep.verdict, Verdict::Irreducible));
    println!("square: {:?}", rep.verdict);
    Ok(())
}
