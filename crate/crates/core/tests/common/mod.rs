#![allow(dead_code)]

pub mod props;

use std::collections::HashMap;

use besovlab::energy::{EnergyProfile, ScalingFit};
use besovlab::space::Space;
use rand::Rng;

/// Random weighted space with at most `max_n` atoms: Euclidean, or an
/// explicit l1 metric when `explicit` is set.
pub fn random_space<R: Rng>(rng: &mut R, max_n: usize, explicit: bool) -> (Space, Vec<f64>) {
    let n = rng.gen_range(8..=max_n);
    let dim = rng.gen_range(1..=3);
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let d = |i: usize, j: usize| -> f64 {
        let (a, b) = (&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]);
        if explicit {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        } else {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        }
    };
    let dist: Vec<f64> = (0..n * n).map(|k| d(k / n, k % n)).collect();
    let space = if explicit {
        Space::explicit(dim, coords, weights, dist.clone()).unwrap()
    } else {
        Space::euclidean(dim, coords, weights).unwrap()
    };
    (space, dist)
}

/// Plain double and triple loops over a distance matrix.
pub struct Naive<'a> {
    pub dist: &'a [f64],
    pub w: &'a [f64],
}

impl Naive<'_> {
    fn n(&self) -> usize {
        self.w.len()
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n() + j]
    }

    fn ball(&self, x: usize, r: f64) -> f64 {
        (0..self.n()).filter(|&z| self.d(x, z) < r).map(|z| self.w[z]).sum()
    }

    pub fn besov_pp(&self, v: &[f64], p: f64, theta: f64) -> f64 {
        let mut s = 0.0;
        for x in 0..self.n() {
            for y in 0..self.n() {
                let d = self.d(x, y);
                if d > 0.0 {
                    s += (v[x] - v[y]).abs().powf(p) * self.w[x] * self.w[y] / (d.powf(theta * p) * self.ball(x, d));
                }
            }
        }
        s
    }

    pub fn profile(&self, v: &[f64], p: f64, theta: f64, radii: &[f64]) -> Vec<f64> {
        radii
            .iter()
            .map(|&t| {
                let mut s = 0.0;
                for x in 0..self.n() {
                    let inner: f64 = (0..self.n())
                        .filter(|&y| self.d(x, y) < t)
                        .map(|y| self.w[y] * (v[x] - v[y]).abs().powf(p))
                        .sum();
                    s += self.w[x] * inner / self.ball(x, t);
                }
                s / t.powf(theta * p)
            })
            .collect()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Power-law fit of a profile restricted to `lo <= t <= hi`.
pub fn window_fit(prof: &EnergyProfile, lo: f64, hi: f64) -> Option<ScalingFit> {
    let (r, v): (Vec<f64>, Vec<f64>) = prof
        .radii
        .iter()
        .zip(&prof.values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .unzip();
    ScalingFit::fit(&r, &v)
}

/// Unit-conductance Sierpinski gasket graph at `level`, on the triangular
/// lattice with side `2^level`, and its corners `(0,0)`, `(2^level,0)`.
pub fn gasket_lattice(level: u32) -> (usize, Vec<(usize, usize)>, usize, usize) {
    let mut ids: HashMap<(u64, u64), usize> = HashMap::new();
    let mut edges = Vec::new();
    let id = |v: (u64, u64), ids: &mut HashMap<(u64, u64), usize>| {
        let k = ids.len();
        *ids.entry(v).or_insert(k)
    };
    let mut stack = vec![(0u64, 0u64, 1u64 << level)];
    while let Some((i, j, s)) = stack.pop() {
        if s == 1 {
            let a = id((i, j), &mut ids);
            let b = id((i + 1, j), &mut ids);
            let c = id((i, j + 1), &mut ids);
            edges.extend([(a, b), (a, c), (b, c)]);
        } else {
            let h = s / 2;
            stack.extend([(i, j, h), (i + h, j, h), (i, j + h, h)]);
        }
    }
    let a = id((0, 0), &mut ids);
    let b = id((1 << level, 0), &mut ids);
    (ids.len(), edges, a, b)
}

/// Effective conductance between two vertices by a dense Dirichlet solve.
pub fn conductance(n: usize, edges: &[(usize, usize)], a: usize, b: usize) -> f64 {
    let free: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
    let mut row = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        row[v] = k;
    }
    let m = free.len();
    let mut mat = vec![0.0f64; m * m];
    let mut rhs = vec![0.0; m];
    for &(x, y) in edges {
        for (u, v) in [(x, y), (y, x)] {
            if row[u] == usize::MAX {
                continue;
            }
            mat[row[u] * m + row[u]] += 1.0;
            if row[v] != usize::MAX {
                mat[row[u] * m + row[v]] -= 1.0;
            } else if v == b {
                rhs[row[u]] += 1.0;
            }
        }
    }
    // Gaussian elimination with partial pivoting
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| mat[i * m + c].abs().total_cmp(&mat[j * m + c].abs())).unwrap();
        if piv != c {
            for k in 0..m {
                mat.swap(c * m + k, piv * m + k);
            }
            rhs.swap(c, piv);
        }
        for r in c + 1..m {
            let f = mat[r * m + c] / mat[c * m + c];
            if f != 0.0 {
                for k in c..m {
                    mat[r * m + k] -= f * mat[c * m + k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| mat[c * m + k] * x[k]).sum();
        x[c] = (rhs[c] - s) / mat[c * m + c];
    }
    let pot = |v: usize| if v == a { 0.0 } else if v == b { 1.0 } else { x[row[v]] };
    edges.iter().map(|&(x, y)| (pot(x) - pot(y)).powi(2)).sum()
}
