//! One pass/fail line per acceptance criterion.

mod common;

use std::time::Instant;

use besovlab::decompose::{irreducibility_verdict, DetectOptions, Verdict};
use besovlab::energy::{
    besov_pp, cross_coupling_iks, default_radii, loglog_witness, multiscale_energy, multiscale_profiles, scale_sums,
    FunctionOnSpace, KernelStrategy, ProfileOptions, ScalingFit,
};
use besovlab::experiment::{cmd_exponents, ExperimentConfig, Grid};
use besovlab::exponents::{build_graph, p_capacity, rho_p_estimate, CapacityOptions, GraphFamily};
use besovlab::family::{FamilyKind, SpaceFamily};
use besovlab::functions::FunctionSpec;
use besovlab::numeric::log_radii;
use common::{conductance, gasket_lattice, random_space, rel, window_fit, Naive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (space, dist) = random_space(&mut rng, 200, case % 5 == 4);
        let v: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (p, theta) = (rng.gen_range(1.0..3.0), rng.gen_range(0.2..1.5));
        let naive = Naive { dist: &dist, w: space.weights() };
        let u = FunctionOnSpace::new(&space, v.clone()).map_err(|e| e.to_string())?;
        let radii = log_radii(space.diameter(), 0.5 * space.min_spacing(), 6);
        let prof = multiscale_energy(&space, &u, p, theta, &radii).map_err(|e| e.to_string())?;
        worst = worst.max(rel(naive.besov_pp(&v, p, theta), besov_pp(&space, &u, p, theta).unwrap()));
        for (a, b) in naive.profile(&v, p, theta, &radii).iter().zip(&prof.values) {
            worst = worst.max(rel(*a, *b));
        }
    }
    check(worst <= 1e-12, format!("50 spaces, worst relative difference {worst:.2e}"))
}

/// Radii of the default grid inside the fit window `[10 h, 0.3]`.
fn window_radii(space: &besovlab::space::Space) -> Vec<f64> {
    let lo = 10.0 * space.min_spacing();
    default_radii(space).into_iter().filter(|&t| t <= 0.3 && t >= lo).collect()
}

fn bowtie_scaling() -> Outcome {
    let space = FamilyKind::GluedCubes { n: 2 }.build(6).map_err(|e| e.to_string())?;
    let u = FunctionSpec::Indicator { label: "E1".into() }.generate(&space).unwrap();
    let radii = window_radii(&space);
    // differences of an indicator are 0 or 1, so one set of ball sums serves every p
    let sums = scale_sums(&space, &u, 1.0, &radii, KernelStrategy::Auto).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1.5, 2.0] {
        for theta in [0.6, 0.8, 1.1] {
            let want = 2.0 - p * theta;
            let values: Vec<f64> = radii.iter().zip(&sums).map(|(t, s)| s / t.powf(p * theta)).collect();
            let fit = ScalingFit::fit(&radii, &values).ok_or("no fit")?;
            ok &= (fit.alpha - want).abs() <= 0.15 && fit.r_squared >= 0.95;
            parts.push(format!("p{p} t{theta}: {:.3}/{want:.2} r2 {:.3}", fit.alpha, fit.r_squared));
        }
    }
    check(ok, parts.join(", "))
}

fn carpet_scaling() -> Outcome {
    let space = FamilyKind::GluedCarpets.build(5).map_err(|e| e.to_string())?;
    let u = FunctionSpec::Indicator { label: "E1".into() }.generate(&space).unwrap();
    let radii = window_radii(&space);
    let prof = multiscale_profiles(&space, &u, 2.0, &[0.7], &radii, &ProfileOptions::profile_only())
        .map_err(|e| e.to_string())?
        .remove(0);
    let want = 8f64.ln() / 3f64.ln() - 1.4;
    let fit = window_fit(&prof, 0.0, f64::INFINITY).ok_or("no fit")?;
    check(
        (fit.alpha - want).abs() <= 0.2,
        format!("slope {:.3}, target {want:.3}, r2 {:.3}", fit.alpha, fit.r_squared),
    )
}

fn capacity_ratios(fam: GraphFamily, p: f64, levels: std::ops::RangeInclusive<u32>) -> Result<Vec<f64>, String> {
    let res = levels
        .map(|m| p_capacity(&build_graph(fam, m)?, p, &CapacityOptions::default()))
        .collect::<besovlab::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(rho_p_estimate(&res, fam).map_err(|e| e.to_string())?.ratios)
}

fn cube_scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let ratios = capacity_ratios(GraphFamily::Cube { n: 2 }, p, 1..=4)?;
        let last = *ratios.last().unwrap();
        let want = 3f64.powf(p - 2.0);
        let tol = if p == 2.0 { 0.05 } else { 0.10 };
        ok &= rel(last, want) <= tol;
        parts.push(format!("p{p}: {last:.4}/{want:.4}"));
    }
    check(ok, parts.join(", "))
}

fn gasket_rho() -> Outcome {
    let fam = GraphFamily::Gasket { n: 2 };
    let res = (1..=4)
        .map(|m| p_capacity(&build_graph(fam, m)?, 2.0, &CapacityOptions::default()))
        .collect::<besovlab::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let exact: Vec<f64> = (1..=4)
        .map(|m| {
            let (n, edges, a, b) = gasket_lattice(m);
            conductance(n, &edges, a, b)
        })
        .collect();
    let est = rho_p_estimate(&res, fam).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (i, r) in est.ratios.iter().enumerate() {
        // ratios are rho estimates C_m / C_{m+1}
        worst = worst.max(rel(*r, exact[i] / exact[i + 1]));
    }
    let dw = 5f64.ln() / 2f64.ln();
    check(
        worst <= 0.02 && rel(est.walk_dimension, dw) <= 0.02,
        format!("ratio error {worst:.2e}, d_w {:.4} vs {dw:.4}", est.walk_dimension),
    )
}

fn bowtie_exponents() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig {
        family: FamilyKind::GluedCubes { n: 2 },
        levels: vec![2, 3, 4],
        p: 1.5,
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.exponents.rho = false;
    cfg.exponents.theta_grid = Grid { start: 1.0, stop: 1.6, step: 0.05 };
    cfg.exponents.theta_star_grid = Grid { start: 0.8, stop: 1.3, step: 0.05 };
    let path = cmd_exponents(&cfg).map_err(|e| e.to_string())?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let tp = report["theta_p"]["theta_p"].as_f64().ok_or("no theta_p")?;
    let ts = report["theta_p_star"]["theta_p_star"].as_f64().ok_or("no theta_p_star")?;
    check(
        (1.20..=1.47).contains(&tp) && (0.9..=1.1).contains(&ts) && tp - ts >= 0.1 - 1e-9,
        format!("theta_p {tp:.2}, theta_p* {ts:.2}"),
    )
}

fn label_mismatch(space: &besovlab::space::Space, comp: &[usize]) -> f64 {
    let w = space.weights();
    ["E1", "E2"]
        .iter()
        .map(|l| {
            let mut inside = vec![false; space.len()];
            comp.iter().for_each(|&i| inside[i] = true);
            (0..space.len())
                .filter(|&i| inside[i] != (space.label(i) == Some(*l)))
                .map(|i| w[i])
                .sum::<f64>()
                / space.total_mass()
        })
        .fold(f64::INFINITY, f64::min)
}

fn decomposition() -> Outcome {
    let cases = [
        (FamilyKind::GluedCubes { n: 2 }, vec![2, 3, 4], 1.5, 1.2, 2),
        (FamilyKind::GluedCarpets, vec![2, 3, 4], 1.3, 1.2, 2),
        (FamilyKind::Cube { n: 2 }, vec![2, 3, 4], 2.0, 1.0, 1),
        (FamilyKind::Gasket { n: 2 }, vec![6, 7, 8], 2.0, 1.16, 1),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, levels, p, theta, want) in cases {
        let fam = SpaceFamily::build(kind, &levels).map_err(|e| e.to_string())?;
        let rep = irreducibility_verdict(&fam, p, theta, None, &DetectOptions::default()).map_err(|e| e.to_string())?;
        let k = match rep.verdict {
            Verdict::Irreducible => 1,
            Verdict::Reducible { k } => k,
            Verdict::Indeterminate => 0,
        };
        let mut case_ok = k == want;
        if want == 2 {
            let worst = rep
                .decomposition
                .components
                .iter()
                .map(|c| label_mismatch(fam.finest(), c))
                .fold(0.0, f64::max);
            case_ok &= worst <= 0.01;
        }
        ok &= case_ok;
        parts.push(format!("{} k={k}", kind.name()));
    }
    check(ok, parts.join(", "))
}

fn property_suites() -> Outcome {
    let mut failed = Vec::new();
    let suites = common::props::all();
    for (name, suite) in &suites {
        if let Err(e) = suite() {
            failed.push(format!("{name}: {e}"));
        }
    }
    check(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} suites x {} cases", suites.len(), common::props::CASES)
        } else {
            failed.join("; ")
        },
    )
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Below ten spacings the atom counts in `B(o, r)` step visibly, so strict
/// growth is checked on the two decades above that floor and only the mean
/// is compared below it.
fn divergence_witness() -> Outcome {
    let space = FamilyKind::GluedCubes { n: 2 }.build(6).map_err(|e| e.to_string())?;
    let radii = default_radii(&space);
    let floor = 10.0 * space.min_spacing();
    let window: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= floor && radii[i] <= 100.0 * floor).collect();
    let w = loglog_witness(&space).map_err(|e| e.to_string())?;
    let iks = cross_coupling_iks(&space, &w, &w, 2.0, 1.0, &radii).map_err(|e| e.to_string())?;
    let v = &iks.values;
    let grows = window.windows(2).all(|k| v[k[1]] > v[k[0]]);
    let growth = v[*window.last().unwrap()] / v[window[0]];
    let below = mean((0..radii.len()).filter(|&i| radii[i] < floor).map(|i| v[i]));
    let above = mean((0..radii.len()).filter(|&i| radii[i] >= floor && radii[i] < 2.0 * floor).map(|i| v[i]));
    // x0 - x0(o) on both pieces agrees at the glue point
    let o = space.glue_point().unwrap()[0];
    let smooth = FunctionOnSpace::from_fn(&space, |x, _| x[0] - o).unwrap();
    let sm = cross_coupling_iks(&space, &smooth, &smooth, 2.0, 1.0, &radii).map_err(|e| e.to_string())?;
    let peak = sm.values.iter().copied().fold(0.0, f64::max);
    let tail_max = window.iter().map(|&k| sm.values[k]).fold(0.0, f64::max);
    check(
        grows && growth > 1.0 && below > above && tail_max <= peak && tail_max.is_finite(),
        format!(
            "loglog strictly growing over {} radii by x{growth:.3}, mean below floor {below:.3} vs {above:.3}; \
             smooth tail max {tail_max:.3e} (peak {peak:.3e})",
            window.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("bow-tie scaling", bowtie_scaling),
        ("glued carpet scaling", carpet_scaling),
        ("cube scaling factor", cube_scaling),
        ("gasket rho", gasket_rho),
        ("bow-tie exponents", bowtie_exponents),
        ("decomposition", decomposition),
        ("property suites", property_suites),
        ("divergence witness", divergence_witness),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {} {name}: PASS ({d}) [{secs:.1}s]", i + 1),
            Err(d) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({d}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
