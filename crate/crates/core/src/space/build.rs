use super::{euclid, point_budget, BallIndex, Construction, Metric, Space};
use crate::error::{Error, Result};

fn check_budget(what: &str, count: Option<u64>, budget: u64) -> Result<u64> {
    match count {
        Some(c) if c <= budget => Ok(c),
        Some(c) => Err(Error::Resource {
            what: what.to_string(),
            needed: c as u128,
            budget: budget as u128,
        }),
        None => Err(Error::Resource {
            what: what.to_string(),
            needed: u128::MAX,
            budget: budget as u128,
        }),
    }
}

fn ipow(base: u64, exp: u64) -> Option<u64> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}

/// Cell-center grid of `[0,1]^n` with `base^m` cells per side and equal masses.
pub fn make_cube_grid(n: usize, m: u32, base: u32) -> Result<Space> {
    make_cube_grid_with_budget(n, m, base, point_budget())
}

pub fn make_cube_grid_with_budget(n: usize, m: u32, base: u32, budget: u64) -> Result<Space> {
    if n == 0 {
        return Err(Error::argument("cube dimension must be at least 1"));
    }
    if base < 3 || base % 2 == 0 {
        return Err(Error::argument("cube subdivision base must be odd and at least 3"));
    }
    let side = ipow(base as u64, m as u64);
    let count = side.and_then(|s| ipow(s, n as u64));
    let count = check_budget("cube grid atoms", count, budget)? as usize;
    let side = side.unwrap_or(1) as usize;
    let h = 1.0 / side as f64;
    let mut coords = Vec::with_capacity(count * n);
    let mut digits = vec![0usize; n];
    for _ in 0..count {
        for &d in &digits {
            coords.push((d as f64 + 0.5) * h);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < side {
                break;
            }
            *d = 0;
        }
    }
    let w = 1.0 / count as f64;
    let mut s = Space::assemble(n, coords, vec![w; count], Metric::Euclidean, Construction::CubeGrid { n, level: m, base })?;
    let corners = (0..1usize << n)
        .map(|c| (0..n).map(|k| ((c >> k) & 1) as f64).collect())
        .collect();
    s.set_marked(corners);
    Ok(s)
}

/// Vertices of a regular unit simplex in `R^n`, the first at the origin.
pub(crate) fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let mut v: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for k in 1..=n {
        let mut c = vec![0.0; n];
        for p in &v {
            for d in 0..n {
                c[d] += p[d] / k as f64;
            }
        }
        let r2: f64 = c.iter().map(|x| x * x).sum();
        c[k - 1] = (1.0 - r2).max(0.0).sqrt();
        v.push(c);
    }
    v
}

/// Level-`m` gasket cells as integer barycentric vertex codes.
///
/// Cell `c` has vertices `codes[c][j]` (each of length `n+1`, summing to
/// `2^m`); the continuum vertex is `sum_k code[k] * v_k / 2^m`.
pub(crate) fn gasket_cells(n: usize, m: u32) -> Vec<Vec<Vec<u64>>> {
    let k = n + 1;
    let mut cells: Vec<Vec<Vec<u64>>> = vec![(0..k)
        .map(|j| (0..k).map(|i| u64::from(i == j)).collect())
        .collect()];
    let mut total = 1u64;
    for _ in 0..m {
        let mut next = Vec::with_capacity(cells.len() * k);
        for cell in &cells {
            for i in 0..k {
                next.push(
                    cell.iter()
                        .map(|code| {
                            let mut c = code.clone();
                            c[i] += total;
                            c
                        })
                        .collect(),
                );
            }
        }
        cells = next;
        total *= 2;
    }
    cells
}

pub(crate) fn gasket_code_point(code: &[u64], verts: &[Vec<f64>], total: u64) -> Vec<f64> {
    let n = verts[0].len();
    let mut x = vec![0.0; n];
    for (k, &c) in code.iter().enumerate() {
        for d in 0..n {
            x[d] += c as f64 * verts[k][d];
        }
    }
    x.iter_mut().for_each(|v| *v /= total as f64);
    x
}

/// Barycenters of level-`m` cells of the `n`-dimensional Sierpinski gasket.
pub fn make_sierpinski_gasket(n: usize, m: u32) -> Result<Space> {
    make_sierpinski_gasket_with_budget(n, m, point_budget())
}

pub fn make_sierpinski_gasket_with_budget(n: usize, m: u32, budget: u64) -> Result<Space> {
    if n == 0 {
        return Err(Error::argument("gasket dimension must be at least 1"));
    }
    let count = check_budget("gasket atoms", ipow(n as u64 + 1, m as u64), budget)? as usize;
    let verts = simplex_vertices(n);
    let total = 1u64 << m;
    let cells = gasket_cells(n, m);
    let mut coords = Vec::with_capacity(count * n);
    for cell in &cells {
        let mut b = vec![0.0; n];
        for code in cell {
            let x = gasket_code_point(code, &verts, total);
            for d in 0..n {
                b[d] += x[d] / (n + 1) as f64;
            }
        }
        coords.extend_from_slice(&b);
    }
    let w = 1.0 / count as f64;
    let mut s = Space::assemble(n, coords, vec![w; count], Metric::Euclidean, Construction::Gasket { n, level: m })?;
    s.set_marked(verts);
    Ok(s)
}

/// Integer cell positions of the level-`m` carpet, row-major.
pub(crate) fn carpet_cells(m: u32) -> Vec<(u64, u64)> {
    let side = 3u64.pow(m);
    let mut out = Vec::with_capacity(8usize.pow(m));
    for j in 0..side {
        for i in 0..side {
            let (mut a, mut b) = (i, j);
            let mut keep = true;
            for _ in 0..m {
                if a % 3 == 1 && b % 3 == 1 {
                    keep = false;
                    break;
                }
                a /= 3;
                b /= 3;
            }
            if keep {
                out.push((i, j));
            }
        }
    }
    out
}

/// Centers of level-`m` cells of the standard Sierpinski carpet in `[0,1]^2`.
pub fn make_sierpinski_carpet(m: u32) -> Result<Space> {
    make_sierpinski_carpet_with_budget(m, point_budget())
}

pub fn make_sierpinski_carpet_with_budget(m: u32, budget: u64) -> Result<Space> {
    check_budget("carpet atoms", ipow(8, m as u64), budget)?;
    let h = 1.0 / 3f64.powi(m as i32);
    let cells = carpet_cells(m);
    let count = cells.len();
    let mut coords = Vec::with_capacity(2 * count);
    for &(i, j) in &cells {
        coords.push((i as f64 + 0.5) * h);
        coords.push((j as f64 + 0.5) * h);
    }
    let w = 1.0 / count as f64;
    let mut s = Space::assemble(2, coords, vec![w; count], Metric::Euclidean, Construction::Carpet { level: m })?;
    s.set_marked(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    Ok(s)
}

/// One-point union of `a` and a point-reflected copy of `b`, joined where
/// marked point `anchor_a` of `a` meets marked point `anchor_b` of `b`.
///
/// The glue point becomes the origin. Atoms from `a` are labelled `E1`,
/// atoms from `b` are labelled `E2`.
pub fn glue_at_point(a: &Space, anchor_a: usize, b: &Space, anchor_b: usize, renormalize: bool) -> Result<Space> {
    glue_at_point_with(a, anchor_a, b, anchor_b, renormalize, point_budget())
}

pub fn glue_at_point_with(
    a: &Space,
    anchor_a: usize,
    b: &Space,
    anchor_b: usize,
    renormalize: bool,
    budget: u64,
) -> Result<Space> {
    if a.dim() != b.dim() {
        return Err(Error::argument("glued spaces must share an ambient dimension"));
    }
    if !a.is_euclidean() || !b.is_euclidean() {
        return Err(Error::argument("gluing needs Euclidean coordinates"));
    }
    let oa = a
        .marked_points()
        .get(anchor_a)
        .ok_or_else(|| Error::argument(format!("no marked point {anchor_a} on the first space")))?
        .clone();
    let ob = b
        .marked_points()
        .get(anchor_b)
        .ok_or_else(|| Error::argument(format!("no marked point {anchor_b} on the second space")))?
        .clone();
    check_budget("glued atoms", Some((a.len() + b.len()) as u64), budget)?;
    let dim = a.dim();
    let shift = |x: &[f64]| -> Vec<f64> { x.iter().zip(&oa).map(|(v, o)| v - o).collect() };
    let reflect = |x: &[f64]| -> Vec<f64> { x.iter().zip(&ob).map(|(v, o)| o - v).collect() };
    let mut coords = Vec::with_capacity((a.len() + b.len()) * dim);
    for i in 0..a.len() {
        coords.extend(shift(a.point(i)));
    }
    let na = a.len();
    for i in 0..b.len() {
        coords.extend(reflect(b.point(i)));
    }
    // the two copies may only meet at the glue point, which is not an atom
    let a_coords = &coords[..na * dim];
    let b_coords = &coords[na * dim..];
    let touching = if na * b.len() <= 4_000_000 {
        (0..b.len()).any(|j| {
            let y = &b_coords[j * dim..(j + 1) * dim];
            (0..na).any(|i| euclid(&a_coords[i * dim..(i + 1) * dim], y) < 1e-12)
        })
    } else {
        let idx = BallIndex::build(dim, a_coords, &a.weights()[..]);
        (0..b.len()).any(|j| {
            idx.nearest(&b_coords[j * dim..(j + 1) * dim], false)
                .is_some_and(|(_, d)| d < 1e-12)
        })
    };
    if touching {
        return Err(Error::geometry(
            "glued copies overlap away from the glue point; choose anchors on the boundary",
        ));
    }
    let mut weights: Vec<f64> = a.weights().iter().chain(b.weights()).copied().collect();
    if renormalize {
        let total = crate::numeric::compensated_sum(weights.iter().copied());
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let construction = Construction::Glued {
        a: Box::new(a.construction().clone()),
        b: Box::new(b.construction().clone()),
        anchors: (anchor_a, anchor_b),
    };
    let mut s = Space::assemble(dim, coords, weights, Metric::Euclidean, construction)?;
    let ids = (0..s.len()).map(|i| u16::from(i >= na)).collect();
    s.set_label_ids(ids, vec!["E1".into(), "E2".into()]);
    let mut marked = vec![vec![0.0; dim]];
    marked.extend(a.marked_points().iter().map(|x| shift(x)));
    marked.extend(b.marked_points().iter().map(|x| reflect(x)));
    s.set_marked(marked);
    s.set_glue_point(vec![0.0; dim]);
    Ok(s)
}
