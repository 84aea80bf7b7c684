use serde::{Deserialize, Serialize};

use super::simple::{disjointify, simple_levels_with, SimpleOutcome, DEFAULT_K_BUDGET};
use super::{certify, membership, Decomposition};
use crate::energy::besov_pp;
use crate::error::{Error, Result};
use crate::family::{level_growth, SpaceFamily};
use crate::functions::FunctionSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisOptions {
    pub value_tol: f64,
    pub mass_tol: f64,
    pub k_budget: usize,
    /// Adjoin the constant function, which has zero energy on a space of
    /// finite mass.
    pub adjoin_constant: bool,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            value_tol: 1e-6,
            mass_tol: 1e-3,
            k_budget: DEFAULT_K_BUDGET,
            adjoin_constant: true,
        }
    }
}

/// Pools the level sets of finite-energy simple candidates, refines them
/// into disjoint pieces and keeps the pieces whose indicators pass the
/// certificate.
pub fn basis_extract(
    candidates: &[FunctionSpec],
    p: f64,
    theta: f64,
    family: &SpaceFamily,
    opts: &BasisOptions,
) -> Result<Decomposition> {
    family.require_levels(2)?;
    if candidates.is_empty() && !opts.adjoin_constant {
        return Err(Error::argument("no candidate functions"));
    }
    let finest = family.finest();
    let mut notes = Vec::new();
    let mut pool: Vec<Vec<usize>> = Vec::new();
    for cand in candidates {
        let mut energies = Vec::with_capacity(family.len());
        for space in &family.spaces {
            energies.push(besov_pp(space, &cand.generate(space)?, p, theta)?);
        }
        let growth = level_growth(&energies, family.refinement())?;
        if !growth.finite {
            notes.push(format!("{}: level slope {:.3} fails the energy test", cand.name(), growth.slope));
            continue;
        }
        let f = cand.generate(finest)?;
        match simple_levels_with(finest, &f, opts.value_tol, opts.mass_tol, opts.k_budget)? {
            SimpleOutcome::Simple(form) => pool.extend(form.sets),
            SimpleOutcome::NotSimple { clusters, .. } => {
                notes.push(format!("{}: {clusters} levels exceed the budget", cand.name()));
            }
        }
    }
    if opts.adjoin_constant {
        pool.push((0..finest.len()).collect());
    }
    let pieces = disjointify(finest, &pool, opts.mass_tol)?;
    let mut components = Vec::new();
    let mut certificates = Vec::new();
    for piece in pieces {
        let c = certify(family, finest, &membership(finest.len(), &piece), p, theta)?;
        if c.passed {
            components.push(piece);
            certificates.push(c);
        } else {
            notes.push(format!(
                "piece of {} atoms dropped: level slope {:.3}, tail {:?}",
                piece.len(),
                c.level_slope,
                c.tail_alpha
            ));
        }
    }
    Ok(Decomposition::assemble(
        finest,
        components,
        certificates,
        family,
        p,
        theta,
        opts.mass_tol,
        notes,
    ))
}
