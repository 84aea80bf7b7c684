//! Self-similar graph approximations with two boundary sets.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::build::{carpet_cells, gasket_cells, gasket_code_point, simplex_vertices};
use crate::space::io::{open, read_json, sidecar_path, write_json};
use crate::space::point_budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    Cube { n: usize },
    Gasket { n: usize },
    Carpet,
}

impl GraphFamily {
    /// Number of similitudes `N` of the underlying self-similar set.
    pub fn maps(&self) -> f64 {
        match *self {
            GraphFamily::Cube { n } => 3f64.powi(n as i32),
            GraphFamily::Gasket { n } => (n + 1) as f64,
            GraphFamily::Carpet => 8.0,
        }
    }

    /// Inverse contraction ratio `L`.
    pub fn scale(&self) -> f64 {
        match self {
            GraphFamily::Gasket { .. } => 2.0,
            _ => 3.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            GraphFamily::Cube { n } => format!("cube{n}"),
            GraphFamily::Gasket { n } => format!("gasket{n}"),
            GraphFamily::Carpet => "carpet".into(),
        }
    }
}

/// Unit-conductance graph with boundary sets `A` (potential 0) and `B`
/// (potential 1).
#[derive(Clone, Debug, PartialEq)]
pub struct GraphApprox {
    pub family: GraphFamily,
    pub level: u32,
    pub dim: usize,
    pub coords: Vec<f64>,
    pub edges: Vec<(u32, u32)>,
    pub boundary_a: Vec<usize>,
    pub boundary_b: Vec<usize>,
    /// Gasket only: vertex indices of every level cell, in atom order.
    pub cells: Option<Vec<Vec<u32>>>,
}

#[derive(Serialize, Deserialize)]
struct GraphMeta {
    family: GraphFamily,
    level: u32,
    dim: usize,
    vertices: usize,
    coords: Vec<f64>,
    boundary_a: Vec<usize>,
    boundary_b: Vec<usize>,
    cells: Option<Vec<Vec<u32>>>,
}

impl GraphApprox {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Neighbour lists built from the edge list.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    /// Checks connectivity, boundary disjointness and the edge list.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.boundary_a.is_empty() || self.boundary_b.is_empty() {
            return Err(Error::Infeasible("boundary sets must be nonempty".into()));
        }
        let mut mark = vec![0u8; n];
        for &a in &self.boundary_a {
            if a >= n {
                return Err(Error::argument("boundary vertex out of range"));
            }
            mark[a] = 1;
        }
        for &b in &self.boundary_b {
            if b >= n {
                return Err(Error::argument("boundary vertex out of range"));
            }
            if mark[b] == 1 {
                return Err(Error::Infeasible(format!("vertex {b} lies in both boundary sets")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &self.edges {
            if a == b || a as usize >= n || b as usize >= n {
                return Err(Error::argument(format!("invalid edge ({a}, {b})")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::argument(format!("edge ({a}, {b}) listed twice")));
            }
        }
        let d = bfs_distances(&self.adjacency(), &self.boundary_a);
        if d.iter().any(|&x| x == usize::MAX) {
            return Err(Error::Infeasible("graph is not connected".into()));
        }
        Ok(())
    }

    /// Writes `u v` lines plus a JSON sidecar with boundaries and coordinates.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for &(a, b) in &self.edges {
            writeln!(w, "{a} {b}")?;
        }
        w.flush()?;
        let meta = GraphMeta {
            family: self.family,
            level: self.level,
            dim: self.dim,
            vertices: self.len(),
            coords: self.coords.clone(),
            boundary_a: self.boundary_a.clone(),
            boundary_b: self.boundary_b.clone(),
            cells: self.cells.clone(),
        };
        write_json(&sidecar_path(path), &meta)
    }

    pub fn read(path: &Path) -> Result<GraphApprox> {
        let meta: GraphMeta = read_json(&sidecar_path(path))?;
        let mut edges = Vec::new();
        for line in BufReader::new(open(path)?).lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let mut it = t.split_whitespace().map(|s| s.parse::<u32>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(Error::Parse(format!("bad edge line {t:?}"))),
            }
        }
        if meta.coords.len() != meta.vertices * meta.dim {
            return Err(Error::Parse("coordinate count does not match vertex count".into()));
        }
        let g = GraphApprox {
            family: meta.family,
            level: meta.level,
            dim: meta.dim,
            coords: meta.coords,
            edges,
            boundary_a: meta.boundary_a,
            boundary_b: meta.boundary_b,
            cells: meta.cells,
        };
        g.validate()?;
        Ok(g)
    }
}

pub(crate) fn bfs_distances(adj: &[Vec<u32>], sources: &[usize]) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    let mut q = VecDeque::new();
    for &s in sources {
        d[s] = 0;
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            let w = w as usize;
            if d[w] == usize::MAX {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

fn budget_check(what: &str, count: f64) -> Result<()> {
    let budget = point_budget();
    if count > budget as f64 {
        return Err(Error::Resource {
            what: what.into(),
            needed: count as u128,
            budget: budget as u128,
        });
    }
    Ok(())
}

/// Grid graph on the cell centers of `side^n` cubes, `x0` fastest.
pub(crate) fn cube_graph(n: usize, side: usize, level: u32) -> Result<GraphApprox> {
    if n == 0 || side < 2 {
        return Err(Error::argument("cube graph needs n >= 1 and at least two cells per side"));
    }
    budget_check("cube graph vertices", (side as f64).powi(n as i32))?;
    let count = side.pow(n as u32);
    let h = 1.0 / side as f64;
    let mut coords = Vec::with_capacity(count * n);
    let mut edges = Vec::new();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut digits = vec![0usize; n];
    for v in 0..count {
        coords.extend(digits.iter().map(|&d| (d as f64 + 0.5) * h));
        let mut stride = 1;
        for &d in &digits {
            if d + 1 < side {
                edges.push((v as u32, (v + stride) as u32));
            }
            stride *= side;
        }
        if digits[0] == 0 {
            a.push(v);
        } else if digits[0] == side - 1 {
            b.push(v);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < side {
                break;
            }
            *d = 0;
        }
    }
    Ok(GraphApprox {
        family: GraphFamily::Cube { n },
        level,
        dim: n,
        coords,
        edges,
        boundary_a: a,
        boundary_b: b,
        cells: None,
    })
}

fn gasket_graph(n: usize, m: u32) -> Result<GraphApprox> {
    if n < 1 {
        return Err(Error::argument("gasket dimension must be at least 1"));
    }
    budget_check("gasket graph cells", ((n + 1) as f64).powi(m as i32))?;
    let verts = simplex_vertices(n);
    let total = 1u64 << m;
    let mut ids: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut coords = Vec::new();
    let mut edges = Vec::new();
    let mut cells = Vec::new();
    for cell in gasket_cells(n, m) {
        let mut vs = Vec::with_capacity(n + 1);
        for code in &cell {
            let next = ids.len() as u32;
            let id = *ids.entry(code.clone()).or_insert_with(|| {
                coords.extend(gasket_code_point(code, &verts, total));
                next
            });
            vs.push(id);
        }
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                edges.push((vs[i], vs[j]));
            }
        }
        cells.push(vs);
    }
    let corner = |k: usize| {
        let mut c = vec![0u64; n + 1];
        c[k] = total;
        ids[&c] as usize
    };
    Ok(GraphApprox {
        family: GraphFamily::Gasket { n },
        level: m,
        dim: n,
        coords,
        edges,
        boundary_a: vec![corner(0)],
        boundary_b: vec![corner(1)],
        cells: Some(cells),
    })
}

fn carpet_graph(m: u32) -> Result<GraphApprox> {
    if m == 0 {
        return Err(Error::argument("carpet graph needs level >= 1"));
    }
    budget_check("carpet graph cells", 8f64.powi(m as i32))?;
    let side = 3u64.pow(m) as usize;
    let cells = carpet_cells(m);
    let mut at = vec![u32::MAX; side * side];
    for (k, &(i, j)) in cells.iter().enumerate() {
        at[j as usize * side + i as usize] = k as u32;
    }
    let h = 1.0 / side as f64;
    let mut coords = Vec::with_capacity(2 * cells.len());
    let mut edges = Vec::new();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (k, &(i, j)) in cells.iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        coords.push((i as f64 + 0.5) * h);
        coords.push((j as f64 + 0.5) * h);
        if i + 1 < side && at[j * side + i + 1] != u32::MAX {
            edges.push((k as u32, at[j * side + i + 1]));
        }
        if j + 1 < side && at[(j + 1) * side + i] != u32::MAX {
            edges.push((k as u32, at[(j + 1) * side + i]));
        }
        if i == 0 {
            a.push(k);
        } else if i == side - 1 {
            b.push(k);
        }
    }
    Ok(GraphApprox {
        family: GraphFamily::Carpet,
        level: m,
        dim: 2,
        coords,
        edges,
        boundary_a: a,
        boundary_b: b,
        cells: None,
    })
}

/// Level-`m` graph of a family. Cube and carpet vertices are cells in
/// the same order as the atoms of the matching space; gasket vertices are
/// cell corners.
pub fn build_graph(family: GraphFamily, level: u32) -> Result<GraphApprox> {
    let g = match family {
        GraphFamily::Cube { n } => {
            if level == 0 {
                return Err(Error::argument("cube graph needs level >= 1"));
            }
            cube_graph(n, 3usize.pow(level), level)?
        }
        GraphFamily::Gasket { n } => gasket_graph(n, level)?,
        GraphFamily::Carpet => carpet_graph(level)?,
    };
    g.validate()?;
    Ok(g)
}

pub fn build_graph_family(family: GraphFamily, levels: &[u32]) -> Result<Vec<GraphApprox>> {
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::argument("levels must be strictly ascending"));
    }
    levels.iter().map(|&m| build_graph(family, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_one_level_one_is_a_path() {
        let g = build_graph(GraphFamily::Cube { n: 1 }, 1).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert_eq!((g.boundary_a.clone(), g.boundary_b.clone()), (vec![0], vec![2]));
    }

    #[test]
    fn gasket_level_one() {
        let g = build_graph(GraphFamily::Gasket { n: 2 }, 1).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.edges.len(), 9);
        assert_eq!(g.vertex(g.boundary_a[0]), &[0.0, 0.0]);
        assert!((g.vertex(g.boundary_b[0])[0] - 1.0).abs() < 1e-15);
        let g3 = build_graph(GraphFamily::Gasket { n: 2 }, 3).unwrap();
        assert_eq!(g3.len(), 42);
        assert_eq!(g3.edges.len(), 81);
    }

    #[test]
    fn carpet_level_two() {
        let g = build_graph(GraphFamily::Carpet, 2).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.boundary_a.len(), 9);
        assert_eq!(g.boundary_b.len(), 9);
        // every kept cell pair sharing an edge
        let mut count = 0;
        let cells = carpet_cells(2);
        for a in &cells {
            for b in &cells {
                if (a.0 + 1 == b.0 && a.1 == b.1) || (a.1 + 1 == b.1 && a.0 == b.0) {
                    count += 1;
                }
            }
        }
        assert_eq!(g.edges.len(), count);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_graph(GraphFamily::Gasket { n: 2 }, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.edges");
        g.write(&path).unwrap();
        assert_eq!(GraphApprox::read(&path).unwrap(), g);
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        let mut g = build_graph(GraphFamily::Cube { n: 1 }, 1).unwrap();
        g.edges.pop();
        assert!(matches!(g.validate(), Err(Error::Infeasible(_))));
        let mut h = build_graph(GraphFamily::Cube { n: 1 }, 1).unwrap();
        h.boundary_b.push(0);
        assert!(matches!(h.validate(), Err(Error::Infeasible(_))));
    }
}
