use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{certify, membership, ComponentCertificate, Decomposition};
use crate::energy::besov_pp;
use crate::error::{Error, Result};
use crate::exponents::{BesovKernel, DENSE_LIMIT};
use crate::family::{level_growth, transfer_set, LevelGrowth, SpaceFamily, FINITE_SLOPE};
use crate::functions::FunctionSpec;
use crate::linalg::{dot, DenseSym};
use crate::space::Space;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectOptions {
    pub k_max: usize,
    /// Level on which the partition is searched; defaults to the finest
    /// level small enough for a dense coupling matrix.
    pub search_level: Option<u32>,
    pub max_iter: usize,
    pub tol: f64,
    /// Seed of the random start vector for inverse iteration.
    pub seed: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            k_max: 4,
            search_level: None,
            max_iter: 500,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

fn search_index(family: &SpaceFamily, opts: &DetectOptions) -> Result<usize> {
    match opts.search_level {
        Some(m) => family
            .levels
            .iter()
            .position(|&l| l == m)
            .ok_or_else(|| Error::argument(format!("level {m} is not in the family"))),
        None => family
            .spaces
            .iter()
            .rposition(|s| s.len() <= DENSE_LIMIT)
            .ok_or_else(|| Error::Resource {
                what: "atoms on the coarsest level".into(),
                needed: family.spaces[0].len() as u128,
                budget: DENSE_LIMIT as u128,
            }),
    }
}

/// Second generalized eigenvector of `(D - K) v = lambda M v` on `atoms`,
/// by inverse iteration with the constants projected out.
fn fiedler(kernel: &BesovKernel, w: &[f64], atoms: &[usize], opts: &DetectOptions) -> Option<Vec<f64>> {
    let m = atoms.len();
    let s: Vec<f64> = atoms.iter().map(|&i| w[i].sqrt()).collect();
    let mut a = DenseSym::zeros(m);
    for (r, &x) in atoms.iter().enumerate() {
        let mut deg = 0.0;
        for (c, &y) in atoms.iter().enumerate() {
            if c != r {
                let k = kernel.entry(x, y);
                a.data[r * m + c] = -k / (s[r] * s[c]);
                deg += k;
            }
        }
        a.data[r * m + r] = deg / (s[r] * s[r]);
    }
    let mean_diag = (0..m).map(|i| a.data[i * m + i]).sum::<f64>() / m as f64;
    let z: Vec<f64> = {
        let nz = dot(&s, &s).sqrt();
        s.iter().map(|v| v / nz).collect()
    };
    let mut shift = 1e-9 * mean_diag;
    let chol = loop {
        let mut b = a.clone();
        (0..m).for_each(|i| b.data[i * m + i] += shift);
        match b.cholesky() {
            Some(c) => break c,
            None if shift < mean_diag => shift *= 100.0,
            None => return None,
        }
    };
    let project = |u: &mut Vec<f64>| {
        let c = dot(u, &z);
        u.iter_mut().zip(&z).for_each(|(a, b)| *a -= c * b);
        let n = dot(u, u).sqrt();
        u.iter_mut().for_each(|a| *a /= n);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project(&mut u);
    for _ in 0..opts.max_iter {
        let mut next = chol.cholesky_solve(&u);
        project(&mut next);
        if dot(&next, &u) < 0.0 {
            next.iter_mut().for_each(|v| *v = -*v);
        }
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        if change < opts.tol {
            break;
        }
    }
    Some(u.iter().zip(&s).map(|(a, b)| a / b).collect())
}

/// Best prefix of the spectral ordering under
/// `cut(S) / min(mu(S), mu(S^c))`.
fn sweep(kernel: &BesovKernel, w: &[f64], atoms: &[usize], v: &[f64]) -> Option<Vec<usize>> {
    let m = atoms.len();
    if m < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(atoms[a].cmp(&atoms[b])));
    let total: f64 = atoms.iter().map(|&i| w[i]).sum();
    let mut inside = vec![false; m];
    let (mut cut, mut mass) = (0.0, 0.0);
    let mut best = (f64::INFINITY, 0usize);
    for (k, &r) in order[..m - 1].iter().enumerate() {
        let x = atoms[r];
        for (c, &y) in atoms.iter().enumerate() {
            if c != r {
                let e = kernel.entry(x, y);
                if inside[c] {
                    cut -= e;
                } else {
                    cut += e;
                }
            }
        }
        inside[r] = true;
        mass += w[x];
        let score = cut / mass.min(total - mass);
        if score < best.0 {
            best = (score, k + 1);
        }
    }
    let mut s: Vec<usize> = order[..best.1].iter().map(|&r| atoms[r]).collect();
    s.sort_unstable();
    Some(s)
}

/// Recursive two-way partition of the search level by spectral sweep cuts
/// of the Besov coupling, keeping only splits whose indicator passes the
/// certificate. Components are reported on the finest level.
pub fn detect_components(family: &SpaceFamily, p: f64, theta: f64, opts: &DetectOptions) -> Result<Decomposition> {
    family.require_levels(2)?;
    if opts.k_max == 0 {
        return Err(Error::argument("k_max must be positive"));
    }
    let si = search_index(family, opts)?;
    let space = &family.spaces[si];
    let kernel = BesovKernel::new(space, p, theta)?;
    let w = space.weights();
    let n = space.len();
    let whole = certify(family, space, &vec![true; n], p, theta)?;
    let mut parts: Vec<(Vec<usize>, ComponentCertificate)> = vec![((0..n).collect(), whole)];
    let mut settled = vec![false];
    let mut notes = vec![format!("partition searched on level {}", family.levels[si])];
    while parts.len() < opts.k_max {
        let next = (0..parts.len())
            .filter(|&i| !settled[i])
            .max_by(|&a, &b| {
                let (ma, mb) = (super::set_mass(w, &parts[a].0), super::set_mass(w, &parts[b].0));
                ma.total_cmp(&mb).then(parts[b].0[0].cmp(&parts[a].0[0]))
            });
        let Some(i) = next else { break };
        let atoms = parts[i].0.clone();
        let split = fiedler(&kernel, w, &atoms, opts).and_then(|v| sweep(&kernel, w, &atoms, &v));
        let Some(s) = split else {
            settled[i] = true;
            continue;
        };
        let cert = certify(family, space, &membership(n, &s), p, theta)?;
        if !cert.passed {
            notes.push(format!(
                "split of {} atoms into {} rejected: level slope {:.3}, tail {:?}",
                atoms.len(),
                s.len(),
                cert.level_slope,
                cert.tail_alpha
            ));
            settled[i] = true;
            continue;
        }
        let in_s = membership(n, &s);
        let rest: Vec<usize> = atoms.iter().copied().filter(|&x| !in_s[x]).collect();
        // the complement of a set has the same certificate
        let rest_cert = if atoms.len() == n {
            cert.clone()
        } else {
            certify(family, space, &membership(n, &rest), p, theta)?
        };
        parts[i] = (s, cert);
        parts.push((rest, rest_cert));
        settled.push(false);
    }
    parts.sort_by_key(|p| p.0[0]);
    let finest = family.finest();
    let mut components = Vec::with_capacity(parts.len());
    let mut certificates = Vec::with_capacity(parts.len());
    for (set, cert) in parts {
        let m = if finest.id() == space.id() {
            membership(n, &set)
        } else {
            transfer_set(space, &membership(n, &set), finest)?
        };
        components.push((0..finest.len()).filter(|&i| m[i]).collect());
        certificates.push(cert);
    }
    Ok(Decomposition::assemble(finest, components, certificates, family, p, theta, 0.0, notes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Irreducible,
    Reducible { k: usize },
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub candidate: String,
    pub energies: Vec<f64>,
    pub growth: LevelGrowth,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub decomposition: Decomposition,
    pub witnesses: Vec<Witness>,
    /// Some deciding slope lies within 0.05 of the threshold.
    pub borderline: bool,
}

fn default_witnesses(space: &Space, p: f64) -> Vec<FunctionSpec> {
    let mut w: Vec<FunctionSpec> = (0..space.dim())
        .map(|axis| FunctionSpec::Coordinate { axis, label: None })
        .collect();
    if space.construction().nominal_dimension().is_some() {
        w.push(FunctionSpec::Harmonic { p });
    }
    w
}

/// Reducible when more than one component is found; otherwise irreducible
/// if some non-constant witness has finite energy and indeterminate if none
/// does.
pub fn irreducibility_verdict(
    family: &SpaceFamily,
    p: f64,
    theta: f64,
    witnesses: Option<&[FunctionSpec]>,
    opts: &DetectOptions,
) -> Result<VerdictReport> {
    let decomposition = detect_components(family, p, theta, opts)?;
    let near = |s: f64| (s - FINITE_SLOPE).abs() <= 0.05;
    let mut borderline = decomposition.certificates.iter().any(|c| near(c.level_slope));
    let mut evidence = Vec::new();
    let verdict = if decomposition.k >= 2 {
        Verdict::Reducible { k: decomposition.k }
    } else {
        let specs = match witnesses {
            Some(w) => w.to_vec(),
            None => default_witnesses(family.finest(), p),
        };
        let mut any = false;
        for spec in &specs {
            let mut energies = Vec::with_capacity(family.len());
            let mut constant = false;
            for space in &family.spaces {
                let f = spec.generate(space)?;
                constant = f.is_constant();
                energies.push(besov_pp(space, &f, p, theta)?);
            }
            if constant {
                continue;
            }
            let growth = level_growth(&energies, family.refinement())?;
            any |= growth.finite;
            borderline |= near(growth.slope);
            evidence.push(Witness {
                candidate: spec.name(),
                energies,
                growth,
            });
        }
        if any {
            Verdict::Irreducible
        } else {
            Verdict::Indeterminate
        }
    };
    Ok(VerdictReport {
        verdict,
        decomposition,
        witnesses: evidence,
        borderline,
    })
}
