//! k-d tree over atom coordinates with per-node mass, used for open-ball
//! queries. Node bounds are only trusted with a relative margin, so every
//! membership decision near a ball boundary is made with the same distance
//! routine a brute-force scan would use.

use super::euclid;

const LEAF_SIZE: usize = 16;
const NONE: u32 = u32::MAX;
const MARGIN: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    mass: f64,
}

/// Spatial index answering open-ball queries on a Euclidean atom set.
#[derive(Clone, Debug)]
pub struct BallIndex {
    dim: usize,
    pts: Vec<f64>,
    w: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    bbox: Vec<f64>,
}

/// Function values laid out in tree order with per-node value ranges.
#[derive(Clone, Debug)]
pub struct FieldRanges {
    vals: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl FieldRanges {
    #[inline]
    fn constant(&self, n: usize) -> Option<f64> {
        (self.lo[n] == self.hi[n]).then_some(self.lo[n])
    }
}

#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

struct Stack {
    buf: [u32; 128],
    top: usize,
}

impl Stack {
    fn new(root: u32) -> Self {
        let mut buf = [0u32; 128];
        buf[0] = root;
        Stack { buf, top: 1 }
    }
    #[inline]
    fn push(&mut self, v: u32) {
        self.buf[self.top] = v;
        self.top += 1;
    }
    #[inline]
    fn pop(&mut self) -> Option<u32> {
        if self.top == 0 {
            None
        } else {
            self.top -= 1;
            Some(self.buf[self.top])
        }
    }
}

impl BallIndex {
    pub fn build(dim: usize, coords: &[f64], weights: &[f64]) -> Self {
        let n = weights.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        let mut bbox = Vec::new();
        let mut work: Vec<(usize, usize, usize)> = vec![(0, n, usize::MAX)];
        // (start, end, parent slot) processed in preorder
        while let Some((start, end, parent)) = work.pop() {
            let id = nodes.len();
            if parent != usize::MAX {
                let p: &mut Node = &mut nodes[parent / 2];
                if parent % 2 == 0 {
                    p.left = id as u32;
                } else {
                    p.right = id as u32;
                }
            }
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for &i in &perm[start..end] {
                for d in 0..dim {
                    let v = coords[i * dim + d];
                    lo[d] = lo[d].min(v);
                    hi[d] = hi[d].max(v);
                }
            }
            let mass = perm[start..end].iter().map(|&i| weights[i]).sum();
            bbox.extend_from_slice(&lo);
            bbox.extend_from_slice(&hi);
            nodes.push(Node {
                start: start as u32,
                end: end as u32,
                left: NONE,
                right: NONE,
                mass,
            });
            if end - start <= LEAF_SIZE {
                continue;
            }
            let mut axis = 0;
            let mut widest = -1.0;
            for d in 0..dim {
                if hi[d] - lo[d] > widest {
                    widest = hi[d] - lo[d];
                    axis = d;
                }
            }
            if widest <= 0.0 {
                continue;
            }
            let mid = start + (end - start) / 2;
            perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                coords[a * dim + axis]
                    .total_cmp(&coords[b * dim + axis])
                    .then(a.cmp(&b))
            });
            work.push((mid, end, 2 * id + 1));
            work.push((start, mid, 2 * id));
        }
        let mut pts = Vec::with_capacity(n * dim);
        for &i in &perm {
            pts.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        let w = perm.iter().map(|&i| weights[i]).collect();
        BallIndex {
            dim,
            pts,
            w,
            perm,
            nodes,
            bbox,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    fn point(&self, k: usize) -> &[f64] {
        &self.pts[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    fn is_leaf(&self, n: usize) -> bool {
        self.nodes[n].left == NONE
    }

    #[inline]
    fn min_dist(&self, n: usize, c: &[f64]) -> f64 {
        let base = 2 * self.dim * n;
        let mut s = 0.0;
        for d in 0..self.dim {
            let lo = self.bbox[base + d];
            let hi = self.bbox[base + self.dim + d];
            let e = if c[d] < lo {
                lo - c[d]
            } else if c[d] > hi {
                c[d] - hi
            } else {
                0.0
            };
            s += e * e;
        }
        s.sqrt()
    }

    #[inline]
    fn max_dist(&self, n: usize, c: &[f64]) -> f64 {
        let base = 2 * self.dim * n;
        let mut s = 0.0;
        for d in 0..self.dim {
            let lo = self.bbox[base + d];
            let hi = self.bbox[base + self.dim + d];
            let e = (c[d] - lo).abs().max((hi - c[d]).abs());
            s += e * e;
        }
        s.sqrt()
    }

    /// Mass of the open ball `B(c, r)`.
    pub fn ball_mass(&self, c: &[f64], r: f64) -> f64 {
        let mut mass = 0.0;
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if self.min_dist(n, c) > r * (1.0 + MARGIN) {
                continue;
            }
            if self.max_dist(n, c) < r * (1.0 - MARGIN) {
                mass += self.nodes[n].mass;
                continue;
            }
            if self.is_leaf(n) {
                let node = &self.nodes[n];
                for k in node.start as usize..node.end as usize {
                    if euclid(c, self.point(k)) < r {
                        mass += self.w[k];
                    }
                }
            } else {
                st.push(self.nodes[n].right);
                st.push(self.nodes[n].left);
            }
        }
        mass
    }

    /// Original indices of atoms in the open ball `B(c, r)`, ascending.
    pub fn ball_indices(&self, c: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if self.min_dist(n, c) > r * (1.0 + MARGIN) {
                continue;
            }
            let node = &self.nodes[n];
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    if euclid(c, self.point(k)) < r {
                        out.push(self.perm[k]);
                    }
                }
            } else {
                st.push(node.right);
                st.push(node.left);
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest atom to `c`; `positive_only` skips atoms at distance zero.
    /// Ties go to the smallest original index.
    pub fn nearest(&self, c: &[f64], positive_only: bool) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if let Some((bd, _)) = best {
                if self.min_dist(n, c) > bd * (1.0 + MARGIN) {
                    continue;
                }
            }
            let node = &self.nodes[n];
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    let d = euclid(c, self.point(k));
                    if positive_only && d == 0.0 {
                        continue;
                    }
                    let cand = (d, self.perm[k]);
                    if best.map_or(true, |b| cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1)) {
                        best = Some(cand);
                    }
                }
            } else {
                let (l, r) = (node.left as usize, node.right as usize);
                // visit the closer child first
                if self.min_dist(l, c) <= self.min_dist(r, c) {
                    st.push(r as u32);
                    st.push(l as u32);
                } else {
                    st.push(l as u32);
                    st.push(r as u32);
                }
            }
        }
        best.map(|(d, i)| (i, d))
    }

    /// Largest distance from `c` to an atom, if it exceeds `floor`.
    pub fn farthest_above(&self, c: &[f64], floor: f64) -> f64 {
        let mut best = floor;
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if self.max_dist(n, c) * (1.0 + MARGIN) <= best {
                continue;
            }
            let node = &self.nodes[n];
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    best = best.max(euclid(c, self.point(k)));
                }
            } else {
                st.push(node.left);
                st.push(node.right);
            }
        }
        best
    }

    /// Lays out function values in tree order and records node value ranges.
    pub fn field(&self, values: &[f64]) -> FieldRanges {
        let vals: Vec<f64> = self.perm.iter().map(|&i| values[i]).collect();
        let m = self.nodes.len();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for n in (0..m).rev() {
            let node = &self.nodes[n];
            if node.left == NONE {
                for &v in &vals[node.start as usize..node.end as usize] {
                    lo[n] = lo[n].min(v);
                    hi[n] = hi[n].max(v);
                }
            } else {
                let (l, r) = (node.left as usize, node.right as usize);
                lo[n] = lo[l].min(lo[r]);
                hi[n] = hi[l].max(hi[r]);
            }
        }
        FieldRanges { vals, lo, hi }
    }

    /// Distance from `c` to the nearest atom whose value differs from `uc`.
    pub fn nearest_differing(&self, c: &[f64], uc: f64, f: &FieldRanges) -> f64 {
        let mut best = f64::INFINITY;
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if f.constant(n) == Some(uc) || self.min_dist(n, c) > best * (1.0 + MARGIN) {
                continue;
            }
            let node = &self.nodes[n];
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    if f.vals[k] != uc {
                        best = best.min(euclid(c, self.point(k)));
                    }
                }
            } else {
                let (l, r) = (node.left as usize, node.right as usize);
                if self.min_dist(l, c) <= self.min_dist(r, c) {
                    st.push(r as u32);
                    st.push(l as u32);
                } else {
                    st.push(l as u32);
                    st.push(r as u32);
                }
            }
        }
        best
    }

    /// `(mass, sum w_y |uc - u(y)|^p)` over the open ball `B(c, r)`.
    pub fn ball_sums(&self, c: &[f64], uc: f64, r: f64, p: f64, f: &FieldRanges) -> (f64, f64) {
        let mut mass = 0.0;
        let mut diff = 0.0;
        let mut st = Stack::new(0);
        while let Some(n) = st.pop() {
            let n = n as usize;
            if self.min_dist(n, c) > r * (1.0 + MARGIN) {
                continue;
            }
            let node = &self.nodes[n];
            if self.max_dist(n, c) < r * (1.0 - MARGIN) {
                mass += node.mass;
                diff += self.inside_diff(n, uc, p, f);
                continue;
            }
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    if euclid(c, self.point(k)) < r {
                        mass += self.w[k];
                        diff += self.w[k] * pow_abs(uc - f.vals[k], p);
                    }
                }
            } else {
                st.push(node.right);
                st.push(node.left);
            }
        }
        (mass, diff)
    }

    fn inside_diff(&self, root: usize, uc: f64, p: f64, f: &FieldRanges) -> f64 {
        let mut diff = 0.0;
        let mut st = Stack::new(root as u32);
        while let Some(n) = st.pop() {
            let n = n as usize;
            let node = &self.nodes[n];
            if let Some(v) = f.constant(n) {
                if v != uc {
                    diff += node.mass * pow_abs(uc - v, p);
                }
                continue;
            }
            if self.is_leaf(n) {
                for k in node.start as usize..node.end as usize {
                    diff += self.w[k] * pow_abs(uc - f.vals[k], p);
                }
            } else {
                st.push(node.right);
                st.push(node.left);
            }
        }
        diff
    }
}
