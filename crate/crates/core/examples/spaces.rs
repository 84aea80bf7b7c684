//! Builds the model spaces, checks doubling, and writes one to CSV.

use besovlab::space::io::write_space;
use besovlab::space::{doubling_report, glue_at_point, make_cube_grid, make_sierpinski_carpet, make_sierpinski_gasket};

fn main() -> besovlab::Result<()> {
    let cube = make_cube_grid(2, 3, 3)?;
    let gasket = make_sierpinski_gasket(2, 5)?;
    let carpet = make_sierpinski_carpet(3)?;
    let glued = glue_at_point(&cube, 0, &cube, 0, false)?;

    for (name, s) in [("cube", &cube), ("gasket", &gasket), ("carpet", &carpet), ("glued cubes", &glued)] {
        let d = doubling_report(s, 64, 1.5)?;
        println!(
            "{name:12} atoms {:5}  mass {:.3}  diam {:.3}  doubling {:.2}  dim {:.3} (nominal {:?})",
            s.len(),
            s.total_mass(),
            s.diameter(),
            d.doubling_constant,
            d.dimension,
            s.nominal_dimension(),
        );
    }

    let path = std::env::temp_dir().join("besovlab_glued_cubes_L3.csv");
    write_space(&glued, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
