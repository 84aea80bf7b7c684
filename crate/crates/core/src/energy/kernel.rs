use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_p_theta, EnergyProfile, FunctionOnSpace};
use crate::error::{Error, Result};
use crate::numeric::{log_radii, Neumaier};
use crate::space::{pow_abs, Space};

/// How ball sums are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelStrategy {
    /// Tree for piecewise-constant functions on large Euclidean spaces,
    /// sorted scans otherwise.
    #[default]
    Auto,
    /// Per-atom sorted distance scans, `O(N^2 log N)`.
    Brute,
    /// k-d tree with value-range pruning.
    Tree,
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub besov: bool,
    pub dyadic: bool,
    pub strategy: KernelStrategy,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            besov: true,
            dyadic: true,
            strategy: KernelStrategy::Auto,
        }
    }
}

impl ProfileOptions {
    /// Profile values only, for spaces too large for the pairwise sums.
    pub fn profile_only() -> Self {
        ProfileOptions {
            besov: false,
            dyadic: false,
            strategy: KernelStrategy::Auto,
        }
    }
}

const BRUTE_SCALE_LIMIT: usize = 2500;
const PIECEWISE_LEVELS: usize = 16;
const FLUSH: usize = 256;

/// Sixteen log-spaced radii per decade from the diameter down to twice the
/// smallest interpoint distance.
pub fn default_radii(space: &Space) -> Vec<f64> {
    log_radii(space.diameter(), 2.0 * space.min_spacing(), 16)
}

pub(crate) fn validate_radii(space: &Space, radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(Error::argument("radius grid needs at least 4 points"));
    }
    if radii.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::argument("radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::argument("radii must be strictly decreasing"));
    }
    if radii[0] > space.diameter() * (1.0 + 1e-12) {
        return Err(Error::argument(format!(
            "largest radius {} exceeds the diameter {}",
            radii[0],
            space.diameter()
        )));
    }
    Ok(())
}

fn check_overflow(vals: &[f64], p: f64) -> Result<()> {
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !pow_abs(hi - lo, p).is_finite() {
        return Err(Error::Overflow(format!("|u(x)-u(y)|^{p} overflows")));
    }
    Ok(())
}

fn distinct_at_most(vals: &[f64], k: usize) -> bool {
    let mut seen: Vec<f64> = Vec::with_capacity(k + 1);
    for &v in vals {
        if !seen.contains(&v) {
            seen.push(v);
            if seen.len() > k {
                return false;
            }
        }
    }
    true
}

fn sum_rows(rows: &[Vec<f64>], width: usize) -> Vec<f64> {
    let mut acc = vec![Neumaier::new(); width];
    for r in rows {
        for (a, &v) in acc.iter_mut().zip(r) {
            a.add(v);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

fn sorted_neighbours(space: &Space, x: usize, order: &mut Vec<(f64, u32)>) {
    order.clear();
    order.extend((0..space.len()).map(|y| (space.dist(x, y), y as u32)));
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

/// Pairwise Besov energy
/// `sum_{x != y} |u(x)-u(y)|^p w_x w_y / (d(x,y)^(theta p) mu(B(x, d(x,y))))`
/// with open balls.
pub fn besov_pp(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64) -> Result<f64> {
    Ok(besov_pp_batch(space, &[u], p, &[theta])?[0][0])
}

/// Besov energies for several functions and several `theta` in one pass;
/// result is indexed `[function][theta]`.
pub fn besov_pp_batch(space: &Space, fns: &[&FunctionOnSpace], p: f64, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    for u in fns {
        u.check(space)?;
        check_overflow(u.values(), p)?;
    }
    for &t in thetas {
        check_p_theta(p, t)?;
    }
    let (nf, nt) = (fns.len(), thetas.len());
    if nf == 0 || nt == 0 || fns.iter().all(|u| u.is_constant()) {
        return Ok(vec![vec![0.0; nt]; nf]);
    }
    let n = space.len();
    let w = space.weights();
    let vals: Vec<&[f64]> = fns.iter().map(|u| u.values()).collect();
    let step = if nt >= 3 {
        let d = thetas[1] - thetas[0];
        thetas
            .windows(2)
            .all(|s| ((s[1] - s[0]) - d).abs() <= 1e-12 * d.abs().max(1.0))
            .then_some(d)
    } else {
        None
    };
    let width = nf * nt;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), vec![0.0; width], vec![Neumaier::new(); width], vec![0.0; nt]),
            |(order, block, acc, pw), x| {
                sorted_neighbours(space, x, order);
                block.iter_mut().for_each(|b| *b = 0.0);
                acc.iter_mut().for_each(|a| *a = Neumaier::new());
                let mut mass = Neumaier::new();
                let mut pending = 0usize;
                let mut i = 0;
                while i < n {
                    let d = order[i].0;
                    let mut j = i + 1;
                    while j < n && order[j].0 == d {
                        j += 1;
                    }
                    if d > 0.0 {
                        let mb = mass.value();
                        let lnd = d.ln();
                        match step {
                            Some(s) => {
                                let ratio = (-s * p * lnd).exp();
                                pw[0] = (-thetas[0] * p * lnd).exp();
                                for k in 1..nt {
                                    pw[k] = pw[k - 1] * ratio;
                                }
                            }
                            None => {
                                for k in 0..nt {
                                    pw[k] = (-thetas[k] * p * lnd).exp();
                                }
                            }
                        }
                        for &(_, y) in &order[i..j] {
                            let y = y as usize;
                            let c = w[y] / mb;
                            for f in 0..nf {
                                let a = pow_abs(vals[f][x] - vals[f][y], p);
                                if a == 0.0 {
                                    continue;
                                }
                                let a = a * c;
                                let b = &mut block[f * nt..(f + 1) * nt];
                                for k in 0..nt {
                                    b[k] += a * pw[k];
                                }
                            }
                            pending += 1;
                        }
                        if pending >= FLUSH {
                            for (a, b) in acc.iter_mut().zip(block.iter_mut()) {
                                a.add(*b);
                                *b = 0.0;
                            }
                            pending = 0;
                        }
                    }
                    for &(_, y) in &order[i..j] {
                        mass.add(w[y as usize]);
                    }
                    i = j;
                }
                acc.iter()
                    .zip(block.iter())
                    .map(|(a, b)| {
                        let mut a = *a;
                        a.add(*b);
                        w[x] * a.value()
                    })
                    .collect()
            },
        )
        .collect();
    let total = sum_rows(&rows, width);
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("Besov energy is not finite".into()));
    }
    Ok((0..nf).map(|f| total[f * nt..(f + 1) * nt].to_vec()).collect())
}

/// `S(t) = sum_x w_x / mu(B(x,t)) * sum_{y in B(x,t)} w_y |u(x)-u(y)|^p`, so
/// that `E_theta(u,t) = S(t) / t^(theta p)`.
pub fn scale_sums(space: &Space, u: &FunctionOnSpace, p: f64, radii: &[f64], strategy: KernelStrategy) -> Result<Vec<f64>> {
    u.check(space)?;
    check_p_theta(p, 1.0)?;
    check_overflow(u.values(), p)?;
    let strategy = match strategy {
        KernelStrategy::Auto => {
            if !space.is_euclidean() || space.len() <= BRUTE_SCALE_LIMIT {
                KernelStrategy::Brute
            } else if distinct_at_most(u.values(), PIECEWISE_LEVELS) {
                KernelStrategy::Tree
            } else {
                KernelStrategy::Brute
            }
        }
        s => s,
    };
    if strategy == KernelStrategy::Tree && space.is_euclidean() {
        Ok(tree_scale_sums(space, u.values(), p, radii))
    } else {
        Ok(brute_scale_sums(space, u.values(), p, radii))
    }
}

fn brute_scale_sums(space: &Space, vals: &[f64], p: f64, radii: &[f64]) -> Vec<f64> {
    let n = space.len();
    let w = space.weights();
    let nr = radii.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), vec![0.0; n + 1], vec![0.0; n + 1]),
            |(order, pm, pd), x| {
                sorted_neighbours(space, x, order);
                let mut m = Neumaier::new();
                let mut s = Neumaier::new();
                for (k, &(_, y)) in order.iter().enumerate() {
                    let y = y as usize;
                    m.add(w[y]);
                    s.add(w[y] * pow_abs(vals[x] - vals[y], p));
                    pm[k + 1] = m.value();
                    pd[k + 1] = s.value();
                }
                radii
                    .iter()
                    .map(|&t| {
                        let c = order.partition_point(|e| e.0 < t);
                        if pd[c] == 0.0 {
                            0.0
                        } else {
                            w[x] * pd[c] / pm[c]
                        }
                    })
                    .collect()
            },
        )
        .collect();
    sum_rows(&rows, nr)
}

fn tree_scale_sums(space: &Space, vals: &[f64], p: f64, radii: &[f64]) -> Vec<f64> {
    let idx = space.index().expect("tree strategy needs a Euclidean space");
    let field = idx.field(vals);
    let w = space.weights();
    // beyond delta(x) every ball around x sees only its own value
    let delta: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|x| idx.nearest_differing(space.point(x), vals[x], &field))
        .collect();
    let mut active: Vec<usize> = (0..space.len()).filter(|&x| delta[x].is_finite()).collect();
    active.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]).then(a.cmp(&b)));
    radii
        .iter()
        .map(|&t| {
            let cut = active.partition_point(|&x| delta[x] < t);
            let mut xs = active[..cut].to_vec();
            xs.sort_unstable();
            let parts: Vec<f64> = xs
                .par_iter()
                .map(|&x| {
                    let (m, d) = idx.ball_sums(space.point(x), vals[x], t, p, &field);
                    if d == 0.0 {
                        0.0
                    } else {
                        w[x] * d / m
                    }
                })
                .collect();
            crate::numeric::compensated_sum(parts)
        })
        .collect()
}

/// Multiscale energy profile with dyadic sum and Besov energy filled in.
pub fn multiscale_energy(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64, radii: &[f64]) -> Result<EnergyProfile> {
    multiscale_energy_with(space, u, p, theta, radii, &ProfileOptions::default())
}

pub fn multiscale_energy_with(
    space: &Space,
    u: &FunctionOnSpace,
    p: f64,
    theta: f64,
    radii: &[f64],
    opts: &ProfileOptions,
) -> Result<EnergyProfile> {
    Ok(multiscale_profiles(space, u, p, &[theta], radii, opts)?.remove(0))
}

/// Profiles for several `theta` sharing one set of ball sums.
pub fn multiscale_profiles(
    space: &Space,
    u: &FunctionOnSpace,
    p: f64,
    thetas: &[f64],
    radii: &[f64],
    opts: &ProfileOptions,
) -> Result<Vec<EnergyProfile>> {
    for &t in thetas {
        check_p_theta(p, t)?;
    }
    validate_radii(space, radii)?;
    let sums = scale_sums(space, u, p, radii, opts.strategy)?;
    let t_min = *radii.last().expect("nonempty");
    let dyadic_radii: Vec<f64> = if opts.dyadic {
        (0..)
            .map(|i| space.diameter() * 0.5f64.powi(i))
            .take_while(|&t| t >= t_min * (1.0 - 1e-12))
            .collect()
    } else {
        Vec::new()
    };
    let dyadic_sums = if dyadic_radii.is_empty() {
        Vec::new()
    } else {
        scale_sums(space, u, p, &dyadic_radii, opts.strategy)?
    };
    let besov = if opts.besov {
        Some(besov_pp_batch(space, &[u], p, thetas)?.remove(0))
    } else {
        None
    };
    let mut out = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let values: Vec<f64> = radii
            .iter()
            .zip(&sums)
            .map(|(&t, &s)| s / t.powf(theta * p))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow("profile value is not finite".into()));
        }
        let dyadic_sum = opts.dyadic.then(|| {
            crate::numeric::compensated_sum(
                dyadic_radii
                    .iter()
                    .zip(&dyadic_sums)
                    .map(|(&t, &s)| s / t.powf(theta * p)),
            )
        });
        out.push(EnergyProfile {
            p,
            theta,
            radii: radii.to_vec(),
            values,
            besov_pp: besov.as_ref().map(|b| b[k]),
            dyadic_sum,
            dyadic_radii: dyadic_radii.clone(),
        });
    }
    Ok(out)
}
