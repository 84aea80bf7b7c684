use rand::seq::index::sample;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Space;
use crate::error::{Error, Result};
use crate::numeric::fit_line;

/// Empirical doubling constant and volume-growth dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DoublingReport {
    /// Largest observed `mu(B(x,2r)) / mu(B(x,r))`.
    pub doubling_constant: f64,
    /// Slope of mean `log mu(B(x,r))` against `log r`.
    pub dimension: f64,
    pub r_squared: f64,
    pub radii: Vec<f64>,
    pub centers: usize,
}

#[derive(Clone, Debug)]
pub struct DoublingOptions {
    pub samples: usize,
    pub decades: f64,
    pub seed: u64,
}

impl Default for DoublingOptions {
    fn default() -> Self {
        DoublingOptions {
            samples: 64,
            decades: 2.0,
            seed: 0,
        }
    }
}

pub fn doubling_report(space: &Space, sample_count: usize, radius_decades: f64) -> Result<DoublingReport> {
    doubling_report_with(
        space,
        &DoublingOptions {
            samples: sample_count,
            decades: radius_decades,
            ..Default::default()
        },
    )
}

/// Radii run on a quarter-octave grid from `max(diam/4 * 10^-decades,
/// 2 * spacing)` up to `diam/4`, so spaces at different refinement levels are
/// probed at the same multiples of their spacing.
pub fn doubling_report_with(space: &Space, opts: &DoublingOptions) -> Result<DoublingReport> {
    if opts.samples == 0 {
        return Err(Error::argument("need at least one sample center"));
    }
    if !(opts.decades > 0.0) {
        return Err(Error::argument("radius range must span a positive number of decades"));
    }
    let r_max = space.diameter() / 4.0;
    let r_min = (r_max * 10f64.powf(-opts.decades)).max(2.0 * space.min_spacing());
    let mut radii = Vec::new();
    let mut k = 0;
    loop {
        let r = r_min * 2f64.powf(k as f64 / 4.0);
        if r > r_max * (1.0 + 1e-12) {
            break;
        }
        radii.push(r);
        k += 1;
    }
    if radii.len() < 4 {
        return Err(Error::Resolution(format!(
            "only {} radii fit between {r_min:.3e} and {r_max:.3e}",
            radii.len()
        )));
    }
    let n = space.len();
    let centers: Vec<usize> = if opts.samples >= n {
        (0..n).collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let mut v = sample(&mut rng, n, opts.samples).into_vec();
        v.sort_unstable();
        v
    };
    // rows: per center, ln mass at each radius and the doubling ratio maximum
    let rows: Vec<(Vec<f64>, f64)> = centers
        .par_iter()
        .map(|&i| {
            let mut logs = Vec::with_capacity(radii.len());
            let mut worst = 1.0f64;
            for &r in &radii {
                let m1 = space.ball_volume(i, r);
                let m2 = space.ball_volume(i, 2.0 * r);
                worst = worst.max(m2 / m1);
                logs.push(m1.ln());
            }
            (logs, worst)
        })
        .collect();
    let doubling_constant = rows.iter().map(|r| r.1).fold(1.0, f64::max);
    let mean_logs: Vec<f64> = (0..radii.len())
        .map(|k| rows.iter().map(|r| r.0[k]).sum::<f64>() / rows.len() as f64)
        .collect();
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let fit = fit_line(&xs, &mean_logs).ok_or_else(|| Error::Resolution("degenerate radius grid".into()))?;
    Ok(DoublingReport {
        doubling_constant,
        dimension: fit.slope,
        r_squared: fit.r_squared,
        radii,
        centers: centers.len(),
    })
}
