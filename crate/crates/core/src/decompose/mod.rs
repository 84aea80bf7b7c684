//! Splitting a space into pieces whose indicators carry finite Besov energy.

mod basis;
mod detect;
mod io;
mod localize;
mod simple;

use serde::{Deserialize, Serialize};

use crate::energy::{
    besov_pp, default_radii, ks_energy_tail, multiscale_energy_with, FunctionOnSpace, ProfileOptions, TailClass,
    DEFAULT_TAIL_FRACTION,
};
use crate::error::Result;
use crate::family::{level_growth, transfer_set, SpaceFamily, FINITE_SLOPE};
use crate::numeric::compensated_sum;
use crate::space::Space;

pub use basis::{basis_extract, BasisOptions};
pub use detect::{detect_components, irreducibility_verdict, DetectOptions, Verdict, VerdictReport, Witness};
pub use io::{read_decomposition, write_decomposition};
pub use localize::{localization_check, LocalizationReport};
pub use simple::{disjointify, simple_levels, simple_levels_with, SimpleFunctionForm, SimpleOutcome, DEFAULT_K_BUDGET};

/// Evidence that an indicator has finite Besov energy and vanishing
/// Korevaar-Schoen energy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentCertificate {
    /// Besov energy of the indicator on each level of the family.
    pub energies: Vec<f64>,
    pub level_slope: f64,
    pub finite: bool,
    /// Power-law exponent of the small-scale tail at the finest level.
    pub tail_alpha: Option<f64>,
    pub tail_class: Option<TailClass>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionStatus {
    Certified,
    /// No candidate set survived the certificates.
    Indeterminate,
}

/// Pairwise disjoint components on the finest level of a family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub status: DecompositionStatus,
    pub k: usize,
    pub components: Vec<Vec<usize>>,
    pub masses: Vec<f64>,
    pub residual: Vec<usize>,
    pub residual_mass: f64,
    pub certificates: Vec<ComponentCertificate>,
    pub p: f64,
    pub theta: f64,
    pub levels: Vec<u32>,
    pub finite_slope: f64,
    pub mass_tol: f64,
    pub notes: Vec<String>,
}

impl Decomposition {
    pub(crate) fn assemble(
        finest: &Space,
        components: Vec<Vec<usize>>,
        certificates: Vec<ComponentCertificate>,
        family: &SpaceFamily,
        p: f64,
        theta: f64,
        mass_tol: f64,
        notes: Vec<String>,
    ) -> Decomposition {
        let w = finest.weights();
        let mut covered = vec![false; finest.len()];
        components.iter().flatten().for_each(|&i| covered[i] = true);
        let residual: Vec<usize> = (0..finest.len()).filter(|&i| !covered[i]).collect();
        Decomposition {
            status: if components.is_empty() {
                DecompositionStatus::Indeterminate
            } else {
                DecompositionStatus::Certified
            },
            k: components.len(),
            masses: components.iter().map(|c| set_mass(w, c)).collect(),
            residual_mass: set_mass(w, &residual),
            residual,
            components,
            certificates,
            p,
            theta,
            levels: family.levels.clone(),
            finite_slope: FINITE_SLOPE,
            mass_tol,
            notes,
        }
    }

    /// Component index per atom, `None` on the residual.
    pub fn assignment(&self, n: usize) -> Vec<Option<usize>> {
        let mut a = vec![None; n];
        for (c, set) in self.components.iter().enumerate() {
            for &i in set {
                a[i] = Some(c);
            }
        }
        a
    }
}

pub(crate) fn set_mass(w: &[f64], set: &[usize]) -> f64 {
    compensated_sum(set.iter().map(|&i| w[i]))
}

pub(crate) fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    set.iter().for_each(|&i| m[i] = true);
    m
}

/// Vanishing class, or a positive tail exponent even when the fit is noisy.
pub(crate) fn tail_vanishes(class: Option<TailClass>, alpha: Option<f64>) -> bool {
    match (class, alpha) {
        (Some(TailClass::Vanishing), _) => true,
        (_, Some(a)) => a > 0.0,
        _ => false,
    }
}

fn indicator(space: &Space, members: &[bool]) -> Result<FunctionOnSpace> {
    FunctionOnSpace::new(space, members.iter().map(|&b| f64::from(u8::from(b))).collect())
}

/// Certificate of the set `members` on `source`, carried to every level of
/// `family` by nearest atom. The tail is only evaluated when the level test
/// passes.
pub(crate) fn certify(
    family: &SpaceFamily,
    source: &Space,
    members: &[bool],
    p: f64,
    theta: f64,
) -> Result<ComponentCertificate> {
    let mut energies = Vec::with_capacity(family.len());
    let mut finest_members = Vec::new();
    for space in &family.spaces {
        let m = if space.id() == source.id() {
            members.to_vec()
        } else {
            transfer_set(source, members, space)?
        };
        energies.push(besov_pp(space, &indicator(space, &m)?, p, theta)?);
        finest_members = m;
    }
    let growth = level_growth(&energies, family.refinement())?;
    let (mut tail_alpha, mut tail_class) = (None, None);
    let trivial = finest_members.iter().all(|&b| b) || !finest_members.iter().any(|&b| b);
    if growth.finite && trivial {
        tail_class = Some(TailClass::Vanishing);
    } else if growth.finite {
        let finest = family.finest();
        let chi = indicator(finest, &finest_members)?;
        let profile = multiscale_energy_with(
            finest,
            &chi,
            p,
            theta,
            &default_radii(finest),
            &ProfileOptions::profile_only(),
        )?;
        let tail = ks_energy_tail(&profile, DEFAULT_TAIL_FRACTION)?;
        tail_alpha = tail.fit.as_ref().map(|f| f.alpha);
        tail_class = Some(tail.class);
    }
    let tail_ok = tail_vanishes(tail_class, tail_alpha);
    Ok(ComponentCertificate {
        energies,
        level_slope: growth.slope,
        finite: growth.finite,
        tail_alpha,
        tail_class,
        passed: growth.finite && tail_ok,
    })
}
