//! Critical exponents from level growth of Besov energies.

use serde::{Deserialize, Serialize};

use super::projection::{project_with, BesovKernel, ProjectionOptions};
use crate::energy::{besov_pp_batch, FunctionOnSpace};
use crate::error::{Error, Result};
use crate::family::{level_growth, SpaceFamily, FINITE_SLOPE};
use crate::functions::FunctionSpec;
use crate::numeric::Neumaier;
use crate::space::pow_abs;

/// Density threshold on the relative approximation error.
pub const DENSITY_TOL: f64 = 0.05;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub theta: f64,
    pub candidate: String,
    pub energies: Vec<f64>,
    pub slope: f64,
    pub raw_slope: f64,
    pub finite: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub p: f64,
    /// Largest grid value at which some candidate has bounded energy.
    pub theta_p: Option<f64>,
    pub threshold: f64,
    pub levels: Vec<u32>,
    pub evidence: Vec<EvidenceRow>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::argument("theta grid must be nonempty and strictly increasing"));
    }
    if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::argument("theta grid values must be positive"));
    }
    Ok(())
}

/// Largest `theta` in the grid for which some non-constant candidate keeps a
/// level-growth slope at most 0.1.
pub fn theta_p_estimate(
    family: &SpaceFamily,
    p: f64,
    candidates: &[FunctionSpec],
    theta_grid: &[f64],
) -> Result<ThetaEstimate> {
    family.require_levels(3)?;
    check_grid(theta_grid)?;
    if candidates.is_empty() {
        return Err(Error::argument("no candidate functions"));
    }
    // energies[level][candidate][theta]
    let mut energies = Vec::with_capacity(family.len());
    for space in &family.spaces {
        let fns = candidates.iter().map(|c| c.generate(space)).collect::<Result<Vec<_>>>()?;
        if space.len() == family.finest().len() {
            if let Some(k) = fns.iter().position(|u| u.is_constant()) {
                return Err(Error::argument(format!("candidate {} is constant", candidates[k].name())));
            }
        }
        let refs: Vec<&FunctionOnSpace> = fns.iter().collect();
        energies.push(besov_pp_batch(space, &refs, p, theta_grid)?);
    }
    let l = family.refinement();
    let mut evidence = Vec::new();
    let mut theta_p = None;
    for (t, &theta) in theta_grid.iter().enumerate() {
        let mut any = false;
        for (c, cand) in candidates.iter().enumerate() {
            let e: Vec<f64> = energies.iter().map(|lv| lv[c][t]).collect();
            let g = level_growth(&e, l)?;
            any |= g.finite;
            evidence.push(EvidenceRow {
                theta,
                candidate: cand.name(),
                energies: e,
                slope: g.slope,
                raw_slope: g.raw_slope,
                finite: g.finite,
            });
        }
        if any {
            theta_p = Some(theta);
        }
    }
    Ok(ThetaEstimate {
        p,
        theta_p,
        threshold: FINITE_SLOPE,
        levels: family.levels.clone(),
        evidence,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityRow {
    pub theta: f64,
    pub target: String,
    /// `None` for the best-constant fallback.
    pub eps: Option<f64>,
    pub energies: Vec<f64>,
    pub slope: f64,
    pub certified: bool,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaStarEstimate {
    pub p: f64,
    /// Largest evaluated `theta` with `D(theta) <= 0.05`.
    pub theta_p_star: Option<f64>,
    pub density_tol: f64,
    pub levels: Vec<u32>,
    /// `(theta, D(theta))` in scan order.
    pub distances: Vec<(f64, f64)>,
    pub evidence: Vec<DensityRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaStarOptions {
    pub eps_grid: Vec<f64>,
    pub projection: ProjectionOptions,
    /// Stop the scan after the first `theta` with `D > tol`; the density
    /// distance is nondecreasing in `theta`.
    pub stop_at_failure: bool,
}

impl Default for ThetaStarOptions {
    fn default() -> Self {
        ThetaStarOptions {
            eps_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            projection: ProjectionOptions::default(),
            stop_at_failure: true,
        }
    }
}

fn rel_error(w: &[f64], g: &[f64], f: &[f64], p: f64) -> f64 {
    let (mut num, mut den) = (Neumaier::new(), Neumaier::new());
    for i in 0..f.len() {
        num.add(w[i] * pow_abs(g[i] - f[i], p));
        den.add(w[i] * pow_abs(f[i], p));
    }
    (num.value() / den.value()).powf(1.0 / p)
}

/// Scans `theta` upward and measures how well each target is approximated by
/// penalized projections whose Besov energy stays bounded across levels.
/// `D(theta)` is the worst target's smallest certified relative `L^p` error
/// at the finest level, with the mass-weighted mean as a fallback.
pub fn theta_p_star_estimate(
    family: &SpaceFamily,
    p: f64,
    targets: &[FunctionSpec],
    theta_grid: &[f64],
    opts: &ThetaStarOptions,
) -> Result<ThetaStarEstimate> {
    family.require_levels(2)?;
    check_grid(theta_grid)?;
    if targets.is_empty() {
        return Err(Error::argument("no target functions"));
    }
    let mut eps = opts.eps_grid.clone();
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::argument("penalty grid must hold positive values"));
    }
    eps.sort_by(f64::total_cmp);
    let l = family.refinement();
    let fns: Vec<Vec<FunctionOnSpace>> = family
        .spaces
        .iter()
        .map(|s| targets.iter().map(|t| t.generate(s)).collect())
        .collect::<Result<_>>()?;
    let finest = family.finest();
    let top = family.len() - 1;
    let mut evidence = Vec::new();
    let mut distances = Vec::new();
    let mut theta_star = None;
    for &theta in theta_grid {
        let kernels = family
            .spaces
            .iter()
            .map(|s| BesovKernel::new(s, p, theta))
            .collect::<Result<Vec<_>>>()?;
        let mut d_theta: f64 = 0.0;
        for (k, target) in targets.iter().enumerate() {
            let f_top = &fns[top][k];
            let fallback = {
                let m = f_top.mean(finest);
                let c = vec![m; finest.len()];
                rel_error(finest.weights(), &c, f_top.values(), p)
            };
            let mut best = fallback;
            evidence.push(DensityRow {
                theta,
                target: target.name(),
                eps: None,
                energies: vec![0.0; family.len()],
                slope: 0.0,
                certified: true,
                error: fallback,
            });
            for &e in &eps {
                let mut energies = Vec::with_capacity(family.len());
                let mut g_top = None;
                for (lv, space) in family.spaces.iter().enumerate() {
                    let r = project_with(space, &kernels[lv], &fns[lv][k], e, &opts.projection)?;
                    energies.push(r.energy);
                    if lv == top {
                        g_top = Some(r.g);
                    }
                }
                let growth = level_growth(&energies, l)?;
                let g_top = g_top.expect("family is nonempty");
                let err = rel_error(finest.weights(), g_top.values(), f_top.values(), p);
                evidence.push(DensityRow {
                    theta,
                    target: target.name(),
                    eps: Some(e),
                    energies,
                    slope: growth.slope,
                    certified: growth.finite,
                    error: err,
                });
                if growth.finite {
                    best = best.min(err);
                    // errors grow with the penalty
                    break;
                }
            }
            d_theta = d_theta.max(best);
        }
        distances.push((theta, d_theta));
        if d_theta <= DENSITY_TOL {
            theta_star = Some(theta);
        } else if opts.stop_at_failure {
            break;
        }
    }
    Ok(ThetaStarEstimate {
        p,
        theta_p_star: theta_star,
        density_tol: DENSITY_TOL,
        levels: family.levels.clone(),
        distances,
        evidence,
    })
}
