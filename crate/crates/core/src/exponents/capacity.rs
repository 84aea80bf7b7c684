//! Graph p-capacity by iteratively reweighted quadratic solves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{bfs_distances, GraphApprox};
use crate::error::{Error, Result};
use crate::linalg::{norm2, pcg};
use crate::numeric::Neumaier;
use crate::space::pow_abs;

const FLOOR_START: f64 = 1e-2;
const FLOOR_MIN: f64 = 1e-12;
const STALL_ROUNDS: usize = 8;
const CG_TOL: f64 = 1e-12;
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    /// Relative energy decrease between outer rounds that ends the solve.
    pub tol: f64,
    pub max_iter: usize,
    /// Certificate threshold relative to the capacity.
    pub kkt_factor: f64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions {
            tol: 1e-10,
            max_iter: 400,
            kkt_factor: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityResult {
    pub p: f64,
    pub level: u32,
    pub capacity: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    /// Norm of the energy gradient on free vertices, with differences below
    /// `1e-12` treated quadratically.
    pub gradient_norm: f64,
}

/// Sum over `0..n` with a result independent of the thread count.
pub(crate) fn det_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Neumaier::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = Neumaier::new();
    parts.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

/// Edge incidence of the free vertices in compressed row form.
struct Incidence {
    free: Vec<usize>,
    /// Row of each vertex among the free ones, `usize::MAX` when fixed.
    row: Vec<usize>,
    offsets: Vec<usize>,
    /// (neighbour vertex, edge index)
    entries: Vec<(u32, u32)>,
}

impl Incidence {
    fn new(g: &GraphApprox, fixed: &[bool]) -> Incidence {
        let n = g.len();
        let free: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
        let mut row = vec![usize::MAX; n];
        for (r, &v) in free.iter().enumerate() {
            row[v] = r;
        }
        let mut deg = vec![0usize; free.len()];
        for &(a, b) in &g.edges {
            for v in [a, b] {
                if row[v as usize] != usize::MAX {
                    deg[row[v as usize]] += 1;
                }
            }
        }
        let mut offsets = vec![0usize; free.len() + 1];
        for r in 0..free.len() {
            offsets[r + 1] = offsets[r] + deg[r];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0u32, 0u32); offsets[free.len()]];
        for (e, &(a, b)) in g.edges.iter().enumerate() {
            for (v, w) in [(a, b), (b, a)] {
                let r = row[v as usize];
                if r != usize::MAX {
                    entries[fill[r]] = (w, e as u32);
                    fill[r] += 1;
                }
            }
        }
        Incidence {
            free,
            row,
            offsets,
            entries,
        }
    }

    fn neighbours(&self, r: usize) -> &[(u32, u32)] {
        &self.entries[self.offsets[r]..self.offsets[r + 1]]
    }
}

fn energy(g: &GraphApprox, u: &[f64], p: f64) -> f64 {
    det_sum(g.edges.len(), |e| {
        let (a, b) = g.edges[e];
        pow_abs(u[a as usize] - u[b as usize], p)
    })
}

/// Derivative factor of the energy smoothed below `floor`: `|x|^p` is
/// replaced by a matching quadratic on `|x| < floor`.
#[inline]
pub(crate) fn smoothed_weight(x: f64, p: f64, floor: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        x.abs().max(floor).powf(p - 2.0)
    }
}

/// Minimizes the convex `phi(s) = sum_e phi_floor(d_e + s delta_e)` over
/// `s >= 0`, with `phi_floor` the smoothed `|x|^p`.
pub(crate) fn convex_line_search(d: &[f64], delta: &[f64], p: f64, floor: f64) -> f64 {
    let dphi = |s: f64| {
        det_sum(d.len(), |e| {
            let x = d[e] + s * delta[e];
            smoothed_weight(x, p, floor) * x * delta[e]
        })
    };
    let f0 = dphi(0.0);
    if !(f0 < 0.0) {
        return 0.0;
    }
    let (mut lo, mut flo) = (0.0, f0);
    let mut hi = 1.0;
    let mut fhi = dphi(hi);
    while fhi < 0.0 && hi < 1e8 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = dphi(hi);
    }
    if fhi < 0.0 {
        return hi;
    }
    // Illinois regula falsi on the sign change of phi'
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mut s = (lo * fhi - hi * flo) / (fhi - flo);
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let fs = dphi(s);
        if fs == 0.0 {
            return s;
        }
        if fs < 0.0 {
            lo = s;
            flo = fs;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = s;
            fhi = fs;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// Minimal `sum_edges |u(x) - u(y)|^p` with `u = 0` on `A`, `u = 1` on `B`.
pub fn p_capacity(graph: &GraphApprox, p: f64, opts: &CapacityOptions) -> Result<CapacityResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::argument(format!("p must lie in (1, inf), got {p}")));
    }
    graph.validate()?;
    let n = graph.len();
    let adj = graph.adjacency();
    let da = bfs_distances(&adj, &graph.boundary_a);
    let db = bfs_distances(&adj, &graph.boundary_b);
    let mut fixed = vec![false; n];
    graph.boundary_a.iter().for_each(|&v| fixed[v] = true);
    graph.boundary_b.iter().for_each(|&v| fixed[v] = true);
    let mut u: Vec<f64> = (0..n).map(|v| da[v] as f64 / (da[v] + db[v]) as f64).collect();
    graph.boundary_a.iter().for_each(|&v| u[v] = 0.0);
    graph.boundary_b.iter().for_each(|&v| u[v] = 1.0);
    let inc = Incidence::new(graph, &fixed);
    let m = inc.free.len();
    let mut cap = energy(graph, &u, p);
    let mut best = (cap, u.clone());
    let mut floor = FLOOR_START;
    let mut delta = vec![0.0; m];
    let mut decrease = f64::INFINITY;
    let mut stalled = 0;
    let weights = |u: &[f64], floor: f64| -> Vec<f64> {
        graph
            .edges
            .par_iter()
            .map(|&(a, b)| smoothed_weight(u[a as usize] - u[b as usize], p, floor))
            .collect()
    };
    // minus the weighted Laplacian of u on free rows
    let residual = |u: &[f64], w: &[f64]| -> Vec<f64> {
        (0..m)
            .into_par_iter()
            .map(|r| {
                let i = inc.free[r];
                -inc.neighbours(r)
                    .iter()
                    .map(|&(j, e)| w[e as usize] * (u[i] - u[j as usize]))
                    .sum::<f64>()
            })
            .collect()
    };
    let kkt = |u: &[f64]| p * norm2(&residual(u, &weights(u, FLOOR_MIN)));
    let mut rounds = 0;
    for iter in 0..opts.max_iter {
        if decrease.abs() < opts.tol {
            let g = kkt(&u);
            if g <= opts.kkt_factor * cap {
                return Ok(CapacityResult {
                    p,
                    level: graph.level,
                    capacity: cap,
                    minimizer: u,
                    iterations: iter,
                    gradient_norm: g,
                });
            }
            if floor == FLOOR_MIN {
                // rounding keeps the certificate out of reach
                stalled += 1;
                if stalled >= STALL_ROUNDS {
                    break;
                }
            }
        }
        let w = weights(&u, floor);
        let diag: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|r| inc.neighbours(r).iter().map(|&(_, e)| w[e as usize]).sum())
            .collect();
        let rhs = residual(&u, &w);
        let apply = |x: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(r, o)| {
                let mut s = 0.0;
                for &(j, e) in inc.neighbours(r) {
                    let rj = inc.row[j as usize];
                    let xj = if rj == usize::MAX { 0.0 } else { x[rj] };
                    s += w[e as usize] * (x[r] - xj);
                }
                *o = s;
            });
        };
        delta.iter_mut().for_each(|v| *v = 0.0);
        pcg(apply, &diag, &rhs, &mut delta, CG_TOL, 20 * m + 100);
        let mut full = vec![0.0; n];
        for (r, &v) in inc.free.iter().enumerate() {
            full[v] = delta[r];
        }
        let de: Vec<f64> = graph.edges.iter().map(|&(a, b)| u[a as usize] - u[b as usize]).collect();
        let dd: Vec<f64> = graph
            .edges
            .iter()
            .map(|&(a, b)| full[a as usize] - full[b as usize])
            .collect();
        let s = convex_line_search(&de, &dd, p, floor);
        if s > 0.0 {
            for &v in &inc.free {
                u[v] += s * full[v];
            }
        }
        let new_cap = energy(graph, &u, p);
        decrease = (cap - new_cap) / cap;
        cap = new_cap;
        if cap < best.0 {
            best = (cap, u.clone());
        }
        floor = (floor * 0.5).max(FLOOR_MIN);
        rounds = iter + 1;
    }
    let grad = kkt(&best.1);
    Err(Error::Convergence {
        message: format!(
            "p-capacity did not certify after {} rounds (energy {:.6e}, gradient {:.3e})",
            rounds, best.0, grad
        ),
        iterations: rounds,
        best_value: best.0,
        best: best.1,
    })
}
