//! Deterministic parallel linear algebra: dot products with fixed chunking,
//! preconditioned conjugate gradients, dense Cholesky.

use rayon::prelude::*;

use crate::numeric::Neumaier;

const CHUNK: usize = 4096;

/// Dot product whose value does not depend on the thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    let mut acc = Neumaier::new();
    parts.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Copy, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, given through
/// `apply(v, out)`, with Jacobi preconditioner `diag`. `x` holds the
/// starting guess on entry.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgReport {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgReport {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / bnorm;
    let mut it = 0;
    while res > rel_tol && it < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        z.par_iter_mut()
            .zip(&r)
            .zip(diag)
            .for_each(|((zi, ri), d)| *zi = ri / d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        res = norm2(&r) / bnorm;
        it += 1;
    }
    CgReport {
        iterations: it,
        relative_residual: res,
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug)]
pub struct DenseSym {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        DenseSym {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// In-place lower Cholesky factor; `None` if not positive definite.
    pub fn cholesky(mut self) -> Option<DenseSym> {
        let n = self.n;
        for j in 0..n {
            let mut d = self.data[j * n + j];
            for k in 0..j {
                let l = self.data[j * n + k];
                d -= l * l;
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            self.data[j * n + j] = d;
            let (head, tail) = self.data.split_at_mut((j + 1) * n);
            let rj = &head[j * n..j * n + j];
            tail.par_chunks_mut(n).for_each(|ri| {
                let s: f64 = ri[..j].iter().zip(rj).map(|(a, b)| a * b).sum();
                ri[j] = (ri[j] - s) / d;
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                self.data[i * n + j] = 0.0;
            }
        }
        Some(self)
    }

    /// Solves `L L^T x = b` with `self` a lower Cholesky factor.
    pub fn cholesky_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = self.row(i)[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.get(k, i) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }
}
