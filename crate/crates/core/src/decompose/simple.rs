use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::FunctionOnSpace;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::space::Space;

/// Default cap on the number of nonzero levels.
pub const DEFAULT_K_BUDGET: usize = 8;

/// `f = sum_i b_i chi_{E_i}` off a small residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleFunctionForm {
    /// Nonzero levels, ascending.
    pub levels: Vec<f64>,
    pub sets: Vec<Vec<usize>>,
    pub zero_set: Vec<usize>,
    pub residual: Vec<usize>,
    pub residual_mass: f64,
    /// Largest `|f(x) - b(x)|` off the residual.
    pub max_deviation: f64,
    pub k_budget: usize,
}

impl SimpleFunctionForm {
    /// `sum_i b_i chi_{E_i}`, zero on the residual.
    pub fn reconstruct(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (b, set) in self.levels.iter().zip(&self.sets) {
            for &i in set {
                v[i] = *b;
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SimpleOutcome {
    Simple(SimpleFunctionForm),
    NotSimple { clusters: usize, k_budget: usize },
}

impl SimpleOutcome {
    pub fn form(&self) -> Option<&SimpleFunctionForm> {
        match self {
            SimpleOutcome::Simple(f) => Some(f),
            SimpleOutcome::NotSimple { .. } => None,
        }
    }
}

fn mass(w: &[f64], set: &[usize]) -> f64 {
    compensated_sum(set.iter().map(|&i| w[i]))
}

/// Level extraction with the default level budget.
pub fn simple_levels(space: &Space, f: &FunctionOnSpace, value_tol: f64, mass_tol: f64) -> Result<SimpleOutcome> {
    simple_levels_with(space, f, value_tol, mass_tol, DEFAULT_K_BUDGET)
}

/// Clusters the values of `f` by single linkage: sorted values separated by
/// a gap larger than `value_tol` start a new cluster. Values within
/// `value_tol` of zero form the zero level, clusters lighter than `mass_tol`
/// go to the residual, and each remaining cluster's level is its weighted
/// mean.
pub fn simple_levels_with(
    space: &Space,
    f: &FunctionOnSpace,
    value_tol: f64,
    mass_tol: f64,
    k_budget: usize,
) -> Result<SimpleOutcome> {
    f.check(space)?;
    if !(value_tol >= 0.0 && mass_tol >= 0.0) {
        return Err(Error::argument("tolerances must be nonnegative"));
    }
    let v = f.values();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::argument("function must be bounded"));
    }
    let w = space.weights();
    let (zero_set, mut rest): (Vec<usize>, Vec<usize>) = (0..v.len()).partition(|&i| v[i].abs() <= value_tol);
    rest.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &rest {
        match clusters.last_mut() {
            Some(c) if v[i] - v[*c.last().expect("nonempty")] <= value_tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut levels = Vec::new();
    let mut sets = Vec::new();
    let mut residual = Vec::new();
    for mut c in clusters {
        let m = mass(w, &c);
        if m < mass_tol {
            residual.extend(c);
            continue;
        }
        let v0 = v[c[0]];
        let b = v0 + compensated_sum(c.iter().map(|&i| w[i] * (v[i] - v0))) / m;
        c.sort_unstable();
        levels.push(b);
        sets.push(c);
    }
    if levels.len() > k_budget {
        return Ok(SimpleOutcome::NotSimple {
            clusters: levels.len(),
            k_budget,
        });
    }
    residual.sort_unstable();
    let mut form = SimpleFunctionForm {
        levels,
        sets,
        zero_set,
        residual_mass: mass(w, &residual),
        residual,
        max_deviation: 0.0,
        k_budget,
    };
    let rec = form.reconstruct(v.len());
    let mut in_residual = vec![false; v.len()];
    form.residual.iter().for_each(|&i| in_residual[i] = true);
    form.max_deviation = (0..v.len())
        .filter(|&i| !in_residual[i])
        .map(|i| (v[i] - rec[i]).abs())
        .fold(0.0, f64::max);
    Ok(SimpleOutcome::Simple(form))
}

/// Refines index sets into pairwise disjoint pieces with the same union.
///
/// Atoms are grouped by the set of inputs containing them. Pieces lighter
/// than `mass_tol` are merged, lightest first, into the heaviest piece that
/// shares an input set with them; a light piece sharing no input set with
/// any other piece is kept. Output is ordered by smallest member.
pub fn disjointify(space: &Space, sets: &[Vec<usize>], mass_tol: f64) -> Result<Vec<Vec<usize>>> {
    let n = space.len();
    let words = sets.len().div_ceil(64).max(1);
    let mut sig = vec![0u64; n * words];
    for (s, set) in sets.iter().enumerate() {
        for &i in set {
            if i >= n {
                return Err(Error::argument(format!("index {i} out of range for {n} atoms")));
            }
            sig[i * words + s / 64] |= 1 << (s % 64);
        }
    }
    let mut groups: BTreeMap<&[u64], Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let key = &sig[i * words..(i + 1) * words];
        if key.iter().any(|&x| x != 0) {
            groups.entry(key).or_default().push(i);
        }
    }
    let w = space.weights();
    let mut pieces: Vec<(Vec<u64>, Vec<usize>, f64)> = groups
        .into_iter()
        .map(|(k, members)| {
            let m = mass(w, &members);
            (k.to_vec(), members, m)
        })
        .collect();
    loop {
        let light = (0..pieces.len())
            .filter(|&a| pieces[a].2 < mass_tol)
            .filter(|&a| (0..pieces.len()).any(|b| b != a && overlaps(&pieces[a].0, &pieces[b].0)))
            .min_by(|&a, &b| pieces[a].2.total_cmp(&pieces[b].2).then(pieces[a].1[0].cmp(&pieces[b].1[0])));
        let Some(a) = light else { break };
        let target = (0..pieces.len())
            .filter(|&b| b != a && overlaps(&pieces[a].0, &pieces[b].0))
            .max_by(|&x, &y| pieces[x].2.total_cmp(&pieces[y].2).then(pieces[y].1[0].cmp(&pieces[x].1[0])))
            .expect("light piece has a neighbour");
        let (key, members, m) = pieces.swap_remove(a);
        let t = if target == pieces.len() { a } else { target };
        pieces[t].0.iter_mut().zip(&key).for_each(|(x, y)| *x |= y);
        pieces[t].1.extend(members);
        pieces[t].1.sort_unstable();
        pieces[t].2 += m;
    }
    let mut out: Vec<Vec<usize>> = pieces.into_iter().map(|p| p.1).collect();
    out.sort_by_key(|s| s[0]);
    Ok(out)
}

fn overlaps(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{glue_at_point, make_cube_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Space {
        let coords = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        Space::euclidean(1, coords, vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn two_level_function() {
        let s = line(10);
        let f = FunctionOnSpace::from_fn(&s, |_, i| match i {
            0..=2 => 2.0,
            5..=6 => -3.0,
            _ => 0.0,
        })
        .unwrap();
        let form = simple_levels(&s, &f, 1e-9, 0.0).unwrap().form().unwrap().clone();
        assert_eq!(form.levels, vec![-3.0, 2.0]);
        assert_eq!(form.sets, vec![vec![5, 6], vec![0, 1, 2]]);
        assert_eq!(form.zero_set, vec![3, 4, 7, 8, 9]);
        assert_eq!(form.max_deviation, 0.0);
    }

    #[test]
    fn constant_is_one_level() {
        let s = line(7);
        let f = FunctionOnSpace::constant(&s, 1.5).unwrap();
        let form = simple_levels(&s, &f, 1e-9, 0.0).unwrap().form().unwrap().clone();
        assert_eq!(form.levels, vec![1.5]);
        assert_eq!(form.sets[0], (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn noisy_indicator_recovers_its_set() {
        let q = make_cube_grid(2, 2, 3).unwrap();
        let x = glue_at_point(&q, 0, &q, 0, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals = (0..x.len())
            .map(|i| f64::from(u8::from(x.label(i) == Some("E1"))) + rng.gen_range(-0.01..=0.01))
            .collect();
        let f = FunctionOnSpace::new(&x, vals).unwrap();
        let form = simple_levels(&x, &f, 0.1, 0.0).unwrap().form().unwrap().clone();
        assert_eq!(form.levels.len(), 1);
        assert!((form.levels[0] - 1.0).abs() < 0.01);
        assert_eq!(form.sets[0], x.indices_with_label("E1"));
        assert!(form.max_deviation <= 0.02);
    }

    #[test]
    fn too_many_levels_is_not_simple() {
        let s = line(12);
        let f = FunctionOnSpace::from_fn(&s, |_, i| i as f64 + 1.0).unwrap();
        match simple_levels(&s, &f, 0.1, 0.0).unwrap() {
            SimpleOutcome::NotSimple { clusters, k_budget } => {
                assert_eq!(clusters, 12);
                assert_eq!(k_budget, DEFAULT_K_BUDGET);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlapping_intervals_split_in_three() {
        let s = line(10);
        let a: Vec<usize> = (0..6).collect();
        let b: Vec<usize> = (4..10).collect();
        let out = disjointify(&s, &[a.clone(), b], 0.0).unwrap();
        assert_eq!(out, vec![vec![0, 1, 2, 3], vec![4, 5], vec![6, 7, 8, 9]]);
        let masses: Vec<f64> = out.iter().map(|o| mass(s.weights(), o)).collect();
        assert!((masses[0] - 0.4).abs() < 1e-12 && (masses[1] - 0.2).abs() < 1e-12);
        assert_eq!(disjointify(&s, &[a.clone(), a.clone()], 0.0).unwrap(), vec![a]);
    }

    #[test]
    fn shards_join_their_heaviest_neighbour() {
        let s = line(10);
        let out = disjointify(&s, &[(0..5).collect(), (4..10).collect()], 0.15).unwrap();
        assert_eq!(out, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7, 8, 9]]);
        let again = disjointify(&s, &out, 0.15).unwrap();
        assert_eq!(again, out);
        assert_eq!(disjointify(&s, &[vec![3]], 0.5).unwrap(), vec![vec![3]]);
    }
}
