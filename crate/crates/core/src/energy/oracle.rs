//! Direct double and triple loops over atoms, for cross-checking the
//! kernels on small spaces.

use super::FunctionOnSpace;
use crate::error::{Error, Result};
use crate::numeric::Neumaier;
use crate::space::Space;

/// Largest space the oracle accepts.
pub const ORACLE_LIMIT: usize = 200;

fn check(space: &Space, u: &FunctionOnSpace) -> Result<()> {
    u.check(space)?;
    if space.len() > ORACLE_LIMIT {
        return Err(Error::Resource {
            what: "oracle atoms".into(),
            needed: space.len() as u128,
            budget: ORACLE_LIMIT as u128,
        });
    }
    Ok(())
}

pub fn naive_besov_pp(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64) -> Result<f64> {
    check(space, u)?;
    let (n, w, v) = (space.len(), space.weights(), u.values());
    let mut total = Neumaier::new();
    for x in 0..n {
        for y in 0..n {
            let d = space.dist(x, y);
            if d == 0.0 {
                continue;
            }
            let mut mu = Neumaier::new();
            (0..n).filter(|&z| space.dist(x, z) < d).for_each(|z| mu.add(w[z]));
            total.add((v[x] - v[y]).abs().powf(p) * w[x] * w[y] / (d.powf(theta * p) * mu.value()));
        }
    }
    Ok(total.value())
}

/// `E_theta(u, t)` at each radius.
pub fn naive_profile(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64, radii: &[f64]) -> Result<Vec<f64>> {
    check(space, u)?;
    let (n, w, v) = (space.len(), space.weights(), u.values());
    Ok(radii
        .iter()
        .map(|&t| {
            let mut total = Neumaier::new();
            for x in 0..n {
                let (mut mu, mut s) = (Neumaier::new(), Neumaier::new());
                for y in (0..n).filter(|&y| space.dist(x, y) < t) {
                    mu.add(w[y]);
                    s.add((v[x] - v[y]).abs().powf(p) * w[y]);
                }
                total.add(w[x] * s.value() / mu.value());
            }
            total.value() / t.powf(theta * p)
        })
        .collect())
}
