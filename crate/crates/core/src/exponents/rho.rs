use serde::{Deserialize, Serialize};

use super::capacity::CapacityResult;
use super::graph::GraphFamily;
use crate::error::{Error, Result};

const SPREAD_WARNING: f64 = 0.2;

/// Scaling factor and walk dimension from capacities on consecutive levels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub p: f64,
    pub family: GraphFamily,
    pub levels: Vec<u32>,
    pub capacities: Vec<f64>,
    /// `cap(m) / cap(m+1)` for each consecutive pair.
    pub ratios: Vec<f64>,
    pub rho_p: f64,
    pub extrapolated: bool,
    pub walk_dimension: f64,
    pub warning: Option<String>,
}

fn monotone(r: &[f64]) -> bool {
    r.windows(2).all(|w| w[1] < w[0]) || r.windows(2).all(|w| w[1] > w[0])
}

/// Ratios of consecutive capacities; the last one is extrapolated with one
/// Richardson step (error assumed to decay like `L^-m`) when the ratio
/// sequence is monotone.
pub fn rho_p_estimate(results: &[CapacityResult], family: GraphFamily) -> Result<RhoEstimate> {
    if results.len() < 2 {
        return Err(Error::Resolution("need capacities on at least two levels".into()));
    }
    let p = results[0].p;
    if results.iter().any(|r| r.p != p) {
        return Err(Error::argument("capacities were computed for different p"));
    }
    if results.windows(2).any(|w| w[1].level != w[0].level + 1) {
        return Err(Error::argument("levels must be consecutive and ascending"));
    }
    if results.iter().any(|r| !(r.capacity > 0.0 && r.capacity.is_finite())) {
        return Err(Error::argument("capacities must be positive and finite"));
    }
    let ratios: Vec<f64> = results.windows(2).map(|w| w[0].capacity / w[1].capacity).collect();
    let l = family.scale();
    let k = ratios.len();
    let last = ratios[k - 1];
    let mut extrapolated = false;
    let mut rho = last;
    if k >= 2 && monotone(&ratios) {
        let r = (l * last - ratios[k - 2]) / (l - 1.0);
        if r > 0.0 {
            rho = r;
            extrapolated = true;
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ratios.iter().sum::<f64>() / k as f64;
    let warning = if !monotone(&ratios) && (hi - lo) / mean > SPREAD_WARNING {
        Some(format!("ratios are not monotone and spread {:.1}%", 100.0 * (hi - lo) / mean))
    } else if k < 2 {
        Some("only one ratio; no extrapolation".into())
    } else {
        None
    };
    Ok(RhoEstimate {
        p,
        family,
        levels: results.iter().map(|r| r.level).collect(),
        capacities: results.iter().map(|r| r.capacity).collect(),
        ratios,
        rho_p: rho,
        extrapolated,
        walk_dimension: (family.maps() * rho).ln() / l.ln(),
        warning,
    })
}
