//! Penalized Besov projection `argmin_g ||g - f||_p^p + eps * B(g)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::capacity::smoothed_weight;
use crate::energy::FunctionOnSpace;
use crate::error::{Error, Result};
use crate::linalg::pcg;
use crate::numeric::Neumaier;
use crate::space::{pow_abs, Space};

/// Largest space the dense kernel is built for.
pub const DENSE_LIMIT: usize = 6000;

/// Symmetric Besov coupling `K_xy = w_x w_y (1/mu(B(x,d)) + 1/mu(B(y,d))) / d^(theta p)`,
/// so that the Besov energy is `sum_{x<y} K_xy |u(x)-u(y)|^p`.
#[derive(Clone, Debug)]
pub struct BesovKernel {
    n: usize,
    p: f64,
    theta: f64,
    k: Vec<f64>,
}

impl BesovKernel {
    pub fn new(space: &Space, p: f64, theta: f64) -> Result<BesovKernel> {
        Self::with_exponent(space, p, theta, p * theta)
    }

    /// Kernel with `d^-s` in place of `d^(-theta p)`.
    pub(crate) fn with_exponent(space: &Space, p: f64, theta: f64, s: f64) -> Result<BesovKernel> {
        let n = space.len();
        if n > DENSE_LIMIT {
            return Err(Error::Resource {
                what: "dense Besov kernel atoms".into(),
                needed: n as u128,
                budget: DENSE_LIMIT as u128,
            });
        }
        let w = space.weights();
        let mut r = vec![0.0; n * n];
        r.par_chunks_mut(n).enumerate().for_each(|(x, row)| {
            let mut order: Vec<(f64, u32)> = (0..n).map(|y| (space.dist(x, y), y as u32)).collect();
            order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut mass = Neumaier::new();
            let mut i = 0;
            while i < n {
                let d = order[i].0;
                let mut j = i + 1;
                while j < n && order[j].0 == d {
                    j += 1;
                }
                if d > 0.0 {
                    let c = w[x] / (mass.value() * d.powf(s));
                    for &(_, y) in &order[i..j] {
                        row[y as usize] = c * w[y as usize];
                    }
                }
                for &(_, y) in &order[i..j] {
                    mass.add(w[y as usize]);
                }
                i = j;
            }
        });
        let mut k = vec![0.0; n * n];
        k.par_chunks_mut(n).enumerate().for_each(|(x, row)| {
            for y in 0..n {
                row[y] = r[x * n + y] + r[y * n + x];
            }
        });
        Ok(BesovKernel { n, p, theta, k })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.k[x * self.n + y]
    }

    /// Besov energy of `values`.
    pub fn energy(&self, values: &[f64]) -> f64 {
        let n = self.n;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x| {
                let row = &self.k[x * n..(x + 1) * n];
                let mut acc = Neumaier::new();
                for y in x + 1..n {
                    let a = pow_abs(values[x] - values[y], self.p);
                    if a != 0.0 {
                        acc.add(row[y] * a);
                    }
                }
                acc.value()
            })
            .collect();
        let mut acc = Neumaier::new();
        rows.into_iter().for_each(|v| acc.add(v));
        acc.value()
    }

    /// `sum_{x<y} K_xy phi(u(x) - u(y))` with `|.|^p` smoothed below `floor`.
    fn smoothed_energy(&self, values: &[f64], floor: f64) -> f64 {
        let n = self.n;
        let p = self.p;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x| {
                let row = &self.k[x * n..(x + 1) * n];
                let mut acc = Neumaier::new();
                for y in x + 1..n {
                    acc.add(row[y] * smoothed_pow(values[x] - values[y], p, floor));
                }
                acc.value()
            })
            .collect();
        let mut acc = Neumaier::new();
        rows.into_iter().for_each(|v| acc.add(v));
        acc.value()
    }
}

/// `|x|^p` for `|x| >= floor`, the matching quadratic below.
fn smoothed_pow(x: f64, p: f64, floor: f64) -> f64 {
    let a = x.abs();
    if a >= floor || p == 2.0 {
        pow_abs(x, p)
    } else {
        0.5 * p * floor.powf(p - 2.0) * a * a + (1.0 - 0.5 * p) * floor.powf(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Relative objective decrease that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight floor schedule relative to the range of `f`.
    pub floor_start: f64,
    pub floor_min: f64,
    pub cg_tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol: 1e-7,
            max_iter: 200,
            floor_start: 1e-2,
            floor_min: 1e-6,
            cg_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub g: FunctionOnSpace,
    pub objective: f64,
    /// `||g - f||_p^p`.
    pub fidelity: f64,
    /// Besov energy of `g`.
    pub energy: f64,
    pub iterations: usize,
}

fn fidelity(w: &[f64], g: &[f64], f: &[f64], p: f64, floor: f64) -> f64 {
    let mut acc = Neumaier::new();
    for i in 0..g.len() {
        acc.add(w[i] * smoothed_pow(g[i] - f[i], p, floor));
    }
    acc.value()
}

/// Minimizer of `||g - f||_p^p + eps * besov_pp(g)`.
pub fn besov_projection(
    space: &Space,
    f: &FunctionOnSpace,
    p: f64,
    theta: f64,
    eps: f64,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    let kernel = BesovKernel::new(space, p, theta)?;
    project_with(space, &kernel, f, eps, opts)
}

/// Projection reusing a prebuilt kernel. Iteratively reweighted quadratic
/// majorization with an annealed weight floor; for `p > 2` the step is
/// backtracked on the smoothed objective.
pub fn project_with(
    space: &Space,
    kernel: &BesovKernel,
    f: &FunctionOnSpace,
    eps: f64,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    f.check(space)?;
    if kernel.len() != space.len() {
        return Err(Error::Binding("kernel was built for another space".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::argument("penalty must be positive and finite"));
    }
    let p = kernel.p();
    let n = space.len();
    let w = space.weights();
    let fv = f.values();
    let lo = fv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = hi - lo;
    if scale == 0.0 {
        return Ok(ProjectionResult {
            g: f.clone(),
            objective: 0.0,
            fidelity: 0.0,
            energy: 0.0,
            iterations: 0,
        });
    }
    let objective = |g: &[f64], floor: f64| fidelity(w, g, fv, p, floor) + eps * kernel.smoothed_energy(g, floor);
    let mut g = fv.to_vec();
    let mut floor_rel = opts.floor_start;
    let mut obj = objective(&g, 0.0);
    let mut best = (obj, g.clone());
    let mut b = vec![0.0; n * n];
    for iter in 1..=opts.max_iter {
        let floor = floor_rel * scale;
        let a: Vec<f64> = (0..n).map(|x| w[x] * smoothed_weight(g[x] - fv[x], p, floor)).collect();
        b.par_chunks_mut(n).enumerate().for_each(|(x, row)| {
            let krow = &kernel.k[x * n..(x + 1) * n];
            for y in 0..n {
                row[y] = if y == x {
                    0.0
                } else {
                    eps * krow[y] * smoothed_weight(g[x] - g[y], p, floor)
                };
            }
        });
        let diag: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x| a[x] + b[x * n..(x + 1) * n].iter().sum::<f64>())
            .collect();
        let rhs: Vec<f64> = (0..n).map(|x| a[x] * fv[x]).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(x, o)| {
                let row = &b[x * n..(x + 1) * n];
                let mut s = 0.0;
                for y in 0..n {
                    s += row[y] * (v[x] - v[y]);
                }
                *o = a[x] * v[x] + s;
            });
        };
        let mut v = g.clone();
        pcg(apply, &diag, &rhs, &mut v, opts.cg_tol, 10 * n + 100);
        if p <= 2.0 {
            g = v;
        } else {
            let base = objective(&g, floor);
            let mut s = 1.0;
            loop {
                let trial: Vec<f64> = g.iter().zip(&v).map(|(gi, vi)| gi + s * (vi - gi)).collect();
                if objective(&trial, floor) <= base || s < 1e-6 {
                    g = trial;
                    break;
                }
                s *= 0.5;
            }
        }
        let new_obj = objective(&g, 0.0);
        let decrease = (obj - new_obj) / obj.max(f64::MIN_POSITIVE);
        obj = new_obj;
        if obj < best.0 {
            best = (obj, g.clone());
        }
        if floor_rel <= opts.floor_min && decrease.abs() < opts.tol {
            let energy = kernel.energy(&g);
            let fid = fidelity(w, &g, fv, p, 0.0);
            return Ok(ProjectionResult {
                g: f.with_values(g)?,
                objective: obj,
                fidelity: fid,
                energy,
                iterations: iter,
            });
        }
        floor_rel = (floor_rel * 0.5).max(opts.floor_min);
    }
    Err(Error::Convergence {
        message: format!("Besov projection did not converge in {} rounds", opts.max_iter),
        iterations: opts.max_iter,
        best_value: best.0,
        best: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::besov_pp;
    use crate::space::make_cube_grid;

    #[test]
    fn kernel_energy_matches_pairwise_sum() {
        let q = make_cube_grid(2, 2, 3).unwrap();
        let u = FunctionOnSpace::from_fn(&q, |x, _| (3.0 * x[0]).sin() + x[1]).unwrap();
        for &(p, t) in &[(1.5, 0.7), (2.0, 1.0), (3.0, 0.4)] {
            let k = BesovKernel::new(&q, p, t).unwrap();
            let want = besov_pp(&q, &u, p, t).unwrap();
            assert!(crate::numeric::rel_diff(k.energy(u.values()), want) < 1e-12);
        }
    }

    #[test]
    fn large_penalty_gives_the_mean() {
        let q = make_cube_grid(2, 2, 3).unwrap();
        let f = FunctionOnSpace::from_fn(&q, |x, _| x[0] + 2.0 * x[1]).unwrap();
        let r = besov_projection(&q, &f, 2.0, 0.5, 1e6, &ProjectionOptions::default()).unwrap();
        let mean = f.mean(&q);
        for v in r.g.values() {
            assert!((v - mean).abs() < 1e-4);
        }
    }

    #[test]
    fn small_penalty_keeps_smooth_functions() {
        let q = make_cube_grid(2, 2, 3).unwrap();
        let f = FunctionOnSpace::from_fn(&q, |x, _| x[0] * x[1]).unwrap();
        // the cubic fidelity term lets g move by about sqrt(eps)
        for &(p, eps) in &[(1.5, 1e-6), (3.0, 1e-10)] {
            let r = besov_projection(&q, &f, p, 0.5, eps, &ProjectionOptions::default()).unwrap();
            let err = r.g.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-3, "{p}: {err}");
        }
    }

    #[test]
    fn objective_beats_the_input() {
        let q = make_cube_grid(1, 3, 3).unwrap();
        let f = FunctionOnSpace::from_fn(&q, |x, _| if x[0] < 0.4 { 1.0 } else { 0.0 }).unwrap();
        for &p in &[1.5, 2.0, 3.0] {
            let k = BesovKernel::new(&q, p, 0.9).unwrap();
            let r = project_with(&q, &k, &f, 0.05, &ProjectionOptions::default()).unwrap();
            assert!(r.objective <= 0.05 * k.energy(f.values()) * (1.0 + 1e-12));
            assert!(r.energy < k.energy(f.values()));
        }
    }
}
