//! Discrete p-capacities across levels and the scaling factor rho.

use besovlab::exponents::{build_graph, p_capacity, rho_p_estimate, CapacityOptions, GraphFamily};

fn main() -> besovlab::Result<()> {
    let fam = GraphFamily::Gasket { n: 2 };
    let p = 2.0;
    let mut results = Vec::new();
    for level in 1..=4 {
        let g = build_graph(fam, level)?;
        let r = p_capacity(&g, p, &CapacityOptions::default())?;
        println!("level {level}: {} vertices, capacity {:.6}", g.len(), r.capacity);
        results.push(r);
    }
    let est = rho_p_estimate(&results, fam)?;
    println!(
        "rho {:.4}, walk dimension {:.4} (log5/log2 = {:.4})",
        est.rho_p,
        est.walk_dimension,
        5f64.ln() / 2f64.ln()
    );
    Ok(())
}
