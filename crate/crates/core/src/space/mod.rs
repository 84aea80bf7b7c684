//! Atomic metric measure spaces: finite atom sets carrying cell masses,
//! approximating self-similar sets and their one-point gluings.

pub(crate) mod build;
mod doubling;
mod index;
pub mod io;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{glue_at_point, make_cube_grid, make_sierpinski_carpet, make_sierpinski_gasket};
pub use build::{glue_at_point_with, make_cube_grid_with_budget, make_sierpinski_carpet_with_budget};
pub use build::make_sierpinski_gasket_with_budget;
pub use doubling::{doubling_report, doubling_report_with, DoublingOptions, DoublingReport};
pub use index::{BallIndex, FieldRanges};
pub(crate) use index::pow_abs;

/// Default cap on atom counts when `BESOVLAB_BUDGET` is unset.
pub const DEFAULT_POINT_BUDGET: u64 = 4_000_000;

/// Atom budget from the `BESOVLAB_BUDGET` environment variable.
pub fn point_budget() -> u64 {
    std::env::var("BESOVLAB_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_POINT_BUDGET)
}

/// Canonical Euclidean distance. Every ball-membership test goes through it.
#[inline]
pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    ExplicitMatrix,
}

#[derive(Clone, Debug)]
pub enum Metric {
    Euclidean,
    /// Row-major `N x N` distance matrix.
    Explicit(Arc<Vec<f64>>),
}

/// How a space was produced; used to rebuild related objects such as graph
/// approximations and harmonic witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Construction {
    CubeGrid { n: usize, level: u32, base: u32 },
    Gasket { n: usize, level: u32 },
    Carpet { level: u32 },
    Glued { a: Box<Construction>, b: Box<Construction>, anchors: (usize, usize) },
    Custom,
}

impl Construction {
    /// Hausdorff dimension of the continuum object, when known.
    pub fn nominal_dimension(&self) -> Option<f64> {
        match self {
            Construction::CubeGrid { n, .. } => Some(*n as f64),
            Construction::Gasket { n, .. } => Some(((*n + 1) as f64).ln() / 2f64.ln()),
            Construction::Carpet { .. } => Some(8f64.ln() / 3f64.ln()),
            Construction::Glued { a, b, .. } => match (a.nominal_dimension(), b.nominal_dimension()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            },
            Construction::Custom => None,
        }
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Finite metric measure space of atoms with positive masses.
#[derive(Clone, Debug)]
pub struct Space {
    id: u64,
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    metric: Metric,
    diameter: f64,
    label_ids: Option<Vec<u16>>,
    label_names: Vec<String>,
    glue_point: Option<Vec<f64>>,
    marked: Vec<Vec<f64>>,
    construction: Construction,
    index: OnceLock<BallIndex>,
    spacing: OnceLock<f64>,
}

impl Space {
    /// Euclidean space from row-major coordinates.
    pub fn euclidean(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Space> {
        Self::assemble(dim, coords, weights, Metric::Euclidean, Construction::Custom)
    }

    /// Space with an explicit distance matrix. Coordinates are kept for
    /// serialization only.
    pub fn explicit(dim: usize, coords: Vec<f64>, weights: Vec<f64>, distances: Vec<f64>) -> Result<Space> {
        let n = weights.len();
        if distances.len() != n * n {
            return Err(Error::argument("distance matrix must be N x N"));
        }
        validate_matrix(&distances, n)?;
        Self::assemble(dim, coords, weights, Metric::Explicit(Arc::new(distances)), Construction::Custom)
    }

    pub(crate) fn assemble(
        dim: usize,
        coords: Vec<f64>,
        weights: Vec<f64>,
        metric: Metric,
        construction: Construction,
    ) -> Result<Space> {
        let n = weights.len();
        if dim == 0 {
            return Err(Error::argument("dimension must be at least 1"));
        }
        if n == 0 {
            return Err(Error::argument("space needs at least one atom"));
        }
        if coords.len() != n * dim {
            return Err(Error::argument("coordinate array does not match atom count"));
        }
        if let Some(bad) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::argument(format!("weight {bad} is not positive and finite")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::argument("coordinates must be finite"));
        }
        let mut s = Space {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            dim,
            coords,
            weights,
            metric,
            diameter: 0.0,
            label_ids: None,
            label_names: Vec::new(),
            glue_point: None,
            marked: Vec::new(),
            construction,
            index: OnceLock::new(),
            spacing: OnceLock::new(),
        };
        s.diameter = s.compute_diameter();
        Ok(s)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::compensated_sum(self.weights.iter().copied())
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn metric_kind(&self) -> MetricKind {
        match self.metric {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::Explicit(_) => MetricKind::ExplicitMatrix,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn nominal_dimension(&self) -> Option<f64> {
        self.construction.nominal_dimension()
    }

    /// Distinguished continuum points (corners, vertices) usable as glue anchors.
    pub fn marked_points(&self) -> &[Vec<f64>] {
        &self.marked
    }

    pub fn add_marked_point(&mut self, x: Vec<f64>) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::argument("marked point has the wrong dimension"));
        }
        self.marked.push(x);
        Ok(self.marked.len() - 1)
    }

    pub fn glue_point(&self) -> Option<&[f64]> {
        self.glue_point.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.label_ids
            .as_ref()
            .map(|ids| self.label_names[ids[i] as usize].as_str())
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Indices of atoms tagged with `label`, ascending.
    pub fn indices_with_label(&self, label: &str) -> Vec<usize> {
        let Some(ids) = &self.label_ids else {
            return Vec::new();
        };
        let Some(k) = self.label_names.iter().position(|l| l == label) else {
            return Vec::new();
        };
        (0..ids.len()).filter(|&i| ids[i] as usize == k).collect()
    }

    /// Replaces all labels; `labels[i]` tags atom `i`.
    pub fn set_labels<S: AsRef<str>>(&mut self, labels: &[S]) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::argument("label count does not match atom count"));
        }
        let mut names: Vec<String> = Vec::new();
        let mut ids = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let k = match names.iter().position(|x| x == l) {
                Some(k) => k,
                None => {
                    names.push(l.to_string());
                    names.len() - 1
                }
            };
            ids.push(u16::try_from(k).map_err(|_| Error::argument("too many distinct labels"))?);
        }
        self.label_ids = Some(ids);
        self.label_names = names;
        Ok(())
    }

    pub(crate) fn set_label_ids(&mut self, ids: Vec<u16>, names: Vec<String>) {
        self.label_ids = Some(ids);
        self.label_names = names;
    }

    pub(crate) fn set_glue_point(&mut self, o: Vec<f64>) {
        self.glue_point = Some(o);
    }

    pub(crate) fn set_marked(&mut self, marked: Vec<Vec<f64>>) {
        self.marked = marked;
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Euclidean => euclid(self.point(i), self.point(j)),
            Metric::Explicit(m) => m[i * self.len() + j],
        }
    }

    /// Distance from atom `i` to an arbitrary location (Euclidean spaces only).
    pub fn dist_to(&self, i: usize, x: &[f64]) -> f64 {
        euclid(self.point(i), x)
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.metric, Metric::Euclidean)
    }

    /// Spatial index, built on first use. `None` for explicit metrics.
    pub fn index(&self) -> Option<&BallIndex> {
        match self.metric {
            Metric::Euclidean => Some(
                self.index
                    .get_or_init(|| BallIndex::build(self.dim, &self.coords, &self.weights)),
            ),
            Metric::Explicit(_) => None,
        }
    }

    /// Mass of the open ball `B(x_i, r)`.
    pub fn ball_volume(&self, i: usize, r: f64) -> f64 {
        if self.len() <= BRUTE_LIMIT || !self.is_euclidean() {
            let mut acc = 0.0;
            for j in 0..self.len() {
                if self.dist(i, j) < r {
                    acc += self.weights[j];
                }
            }
            acc
        } else {
            self.index().expect("euclidean").ball_mass(self.point(i), r)
        }
    }

    /// Indices of atoms in the open ball `B(x_i, r)`, ascending.
    pub fn ball(&self, i: usize, r: f64) -> Vec<usize> {
        if self.len() <= BRUTE_LIMIT || !self.is_euclidean() {
            (0..self.len()).filter(|&j| self.dist(i, j) < r).collect()
        } else {
            self.index().expect("euclidean").ball_indices(self.point(i), r)
        }
    }

    /// Smallest positive interpoint distance.
    pub fn min_spacing(&self) -> f64 {
        *self.spacing.get_or_init(|| {
            let n = self.len();
            if n < 2 {
                return self.diameter;
            }
            if n <= BRUTE_LIMIT || !self.is_euclidean() {
                let mut best = f64::INFINITY;
                for i in 0..n {
                    for j in i + 1..n {
                        let d = self.dist(i, j);
                        if d > 0.0 && d < best {
                            best = d;
                        }
                    }
                }
                best
            } else {
                let idx = self.index().expect("euclidean");
                (0..n)
                    .map(|i| idx.nearest(self.point(i), true).map_or(f64::INFINITY, |x| x.1))
                    .fold(f64::INFINITY, f64::min)
            }
        })
    }

    /// Nearest atom to a Euclidean location.
    pub fn nearest_atom(&self, x: &[f64]) -> usize {
        if self.len() <= BRUTE_LIMIT {
            let mut best = (f64::INFINITY, 0usize);
            for j in 0..self.len() {
                let d = euclid(self.point(j), x);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        } else {
            self.index().expect("euclidean").nearest(x, false).expect("nonempty").0
        }
    }

    fn compute_diameter(&self) -> f64 {
        let n = self.len();
        match &self.metric {
            Metric::Explicit(m) => m.iter().copied().fold(0.0, f64::max),
            Metric::Euclidean if n <= BRUTE_LIMIT => {
                let mut best = 0.0f64;
                for i in 0..n {
                    for j in i + 1..n {
                        best = best.max(euclid(self.point(i), self.point(j)));
                    }
                }
                best
            }
            Metric::Euclidean => {
                let idx = self.index().expect("euclidean");
                let mut best = 0.0;
                for i in 0..n {
                    best = idx.farthest_above(self.point(i), best);
                }
                best
            }
        }
    }
}

/// Atom count below which queries scan all atoms.
pub const BRUTE_LIMIT: usize = 2000;

fn validate_matrix(m: &[f64], n: usize) -> Result<()> {
    for i in 0..n {
        if m[i * n + i] != 0.0 {
            return Err(Error::argument("distance matrix diagonal must be zero"));
        }
        for j in 0..n {
            let d = m[i * n + j];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::argument("distances must be finite and nonnegative"));
            }
            if (d - m[j * n + i]).abs() > 1e-12 * d.max(1.0) {
                return Err(Error::argument("distance matrix must be symmetric"));
            }
            if i != j && d == 0.0 {
                return Err(Error::argument("distinct atoms must have positive distance"));
            }
        }
    }
    // triangle inequality; exhaustive for small N, sampled otherwise
    use rand::{Rng, SeedableRng};
    let check = |i: usize, j: usize, k: usize| m[i * n + k] <= m[i * n + j] + m[j * n + k] + 1e-12;
    if n <= 60 {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !check(i, j, k) {
                        return Err(Error::argument("distance matrix violates the triangle inequality"));
                    }
                }
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7472_6961);
        for _ in 0..200_000 {
            let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if !check(i, j, k) {
                return Err(Error::argument("distance matrix violates the triangle inequality"));
            }
        }
    }
    Ok(())
}
