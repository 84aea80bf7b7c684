use serde::{Deserialize, Serialize};

use super::{indicator, membership, tail_vanishes};
use rayon::prelude::*;

use crate::energy::{
    ks_energy_tail, multiscale_energy_with, validate_radii, EnergyProfile, FunctionOnSpace, ProfileOptions, TailClass,
    DEFAULT_TAIL_FRACTION,
};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, Neumaier};
use crate::space::{pow_abs, Space};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub radii: Vec<f64>,
    /// `E_theta(u chi_E, t)`.
    pub lhs: Vec<f64>,
    /// The same double sum with both points restricted to `E`.
    pub rhs: Vec<f64>,
    /// `max |lhs - rhs| / max(lhs, rhs)` over the tail window.
    pub gap: f64,
    pub window: usize,
    pub lhs_tail: TailClass,
    pub rhs_tail: TailClass,
}

/// Compares the multiscale energy of `u chi_E` with its restriction to
/// pairs inside `E`. Requires the small-scale tail of `chi_E` to vanish.
pub fn localization_check(
    space: &Space,
    u: &FunctionOnSpace,
    set: &[usize],
    p: f64,
    theta: f64,
    radii: &[f64],
) -> Result<LocalizationReport> {
    u.check(space)?;
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("u must be bounded"));
    }
    let n = space.len();
    if set.iter().any(|&i| i >= n) {
        return Err(Error::argument("set index out of range"));
    }
    validate_radii(space, radii)?;
    let inside = membership(n, set);
    let chi = indicator(space, &inside)?;
    let opts = ProfileOptions::profile_only();
    let chi_tail = ks_energy_tail(&multiscale_energy_with(space, &chi, p, theta, radii, &opts)?, DEFAULT_TAIL_FRACTION)?;
    if !tail_vanishes(Some(chi_tail.class), chi_tail.fit.as_ref().map(|f| f.alpha)) {
        return Err(Error::Precondition(format!(
            "indicator tail is {:?}, expected vanishing",
            chi_tail.class
        )));
    }
    let cut = u.with_values(
        u.values()
            .iter()
            .zip(&inside)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect(),
    )?;
    let lhs_profile = multiscale_energy_with(space, &cut, p, theta, radii, &opts)?;
    let rhs = restricted_profile(space, u, &inside, p, theta, radii)?;
    let k = lhs_profile.radii.len() - ks_energy_tail(&lhs_profile, DEFAULT_TAIL_FRACTION)?.window;
    let gap = lhs_profile.values[k..]
        .iter()
        .zip(&rhs[k..])
        .map(|(&a, &b)| {
            let m = a.max(b);
            if m > 0.0 {
                (a - b).abs() / m
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let rhs_profile = EnergyProfile {
        values: rhs.clone(),
        ..lhs_profile.clone()
    };
    Ok(LocalizationReport {
        radii: radii.to_vec(),
        window: radii.len() - k,
        lhs_tail: ks_energy_tail(&lhs_profile, DEFAULT_TAIL_FRACTION)?.class,
        rhs_tail: ks_energy_tail(&rhs_profile, DEFAULT_TAIL_FRACTION)?.class,
        lhs: lhs_profile.values,
        rhs,
        gap,
    })
}

/// `sum_{x in E} w_x / mu(B(x,t)) sum_{y in B(x,t) cap E} w_y |u(x)-u(y)|^p / t^(theta p)`.
fn restricted_profile(
    space: &Space,
    u: &FunctionOnSpace,
    inside: &[bool],
    p: f64,
    theta: f64,
    radii: &[f64],
) -> Result<Vec<f64>> {
    let w = space.weights();
    let v = u.values();
    let n = space.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .filter(|&x| inside[x])
        .map(|x| {
            let mut order: Vec<(f64, usize)> = (0..n).map(|y| (space.dist(x, y), y)).collect();
            order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut row = vec![0.0; radii.len()];
            let (mut mass, mut sum) = (Neumaier::new(), Neumaier::new());
            let mut j = 0;
            // radii decrease, so walk them from the back
            for k in (0..radii.len()).rev() {
                while j < n && order[j].0 < radii[k] {
                    let y = order[j].1;
                    mass.add(w[y]);
                    if inside[y] {
                        sum.add(w[y] * pow_abs(v[x] - v[y], p));
                    }
                    j += 1;
                }
                row[k] = w[x] * sum.value() / mass.value();
            }
            row
        })
        .collect();
    Ok(radii
        .iter()
        .enumerate()
        .map(|(k, &t)| compensated_sum(rows.iter().map(|r| r[k])) / t.powf(theta * p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{glue_at_point, make_cube_grid};

    #[test]
    fn whole_space_profiles_coincide() {
        let q = make_cube_grid(2, 3, 3).unwrap();
        let u = FunctionOnSpace::from_fn(&q, |x, _| x[0] * x[1]).unwrap();
        let all: Vec<usize> = (0..q.len()).collect();
        let radii = crate::numeric::log_radii(1.0, 0.01, 8);
        let r = localization_check(&q, &u, &all, 2.0, 0.5, &radii).unwrap();
        for (a, b) in r.lhs.iter().zip(&r.rhs) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
        assert!(r.gap < 1e-12);
    }

    #[test]
    fn rough_sets_are_refused() {
        let q = make_cube_grid(2, 3, 3).unwrap();
        let u = FunctionOnSpace::constant(&q, 1.0).unwrap();
        let half: Vec<usize> = (0..q.len()).filter(|&i| q.point(i)[0] < 0.5).collect();
        let radii = crate::numeric::log_radii(1.0, 0.01, 8);
        let e = localization_check(&q, &u, &half, 2.0, 1.0, &radii).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn constants_on_a_glued_piece_have_vanishing_tails() {
        let q = make_cube_grid(2, 4, 3).unwrap();
        let x = glue_at_point(&q, 0, &q, 0, false).unwrap();
        let u = FunctionOnSpace::constant(&x, 2.0).unwrap();
        let radii = crate::energy::default_radii(&x);
        let r = localization_check(&x, &u, &x.indices_with_label("E1"), 1.5, 0.7, &radii).unwrap();
        assert!(r.rhs.iter().all(|&v| v == 0.0));
        assert_eq!(r.rhs_tail, TailClass::Vanishing);
        assert_eq!(r.lhs_tail, TailClass::Vanishing);
    }
}
