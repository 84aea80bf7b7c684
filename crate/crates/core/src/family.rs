//! Refinement families of spaces and the level-growth test for finite energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::GraphFamily;
use crate::space::{glue_at_point, make_cube_grid, make_sierpinski_carpet, make_sierpinski_gasket, Space};

/// Largest level-growth slope still read as bounded energy.
pub const FINITE_SLOPE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    Cube { n: usize },
    Gasket { n: usize },
    Carpet,
    GluedCubes { n: usize },
    GluedGaskets { n: usize },
    GluedCarpets,
}

impl FamilyKind {
    /// The space at refinement `level`. Glued families join two copies at
    /// their first marked point without renormalizing the mass.
    pub fn build(&self, level: u32) -> Result<Space> {
        let single = match *self {
            FamilyKind::Cube { n } | FamilyKind::GluedCubes { n } => make_cube_grid(n, level, 3)?,
            FamilyKind::Gasket { n } | FamilyKind::GluedGaskets { n } => make_sierpinski_gasket(n, level)?,
            FamilyKind::Carpet | FamilyKind::GluedCarpets => make_sierpinski_carpet(level)?,
        };
        if self.is_glued() {
            glue_at_point(&single, 0, &single, 0, false)
        } else {
            Ok(single)
        }
    }

    /// Linear refinement factor between consecutive levels.
    pub fn refinement(&self) -> f64 {
        self.graph_family().scale()
    }

    pub fn graph_family(&self) -> GraphFamily {
        match *self {
            FamilyKind::Cube { n } | FamilyKind::GluedCubes { n } => GraphFamily::Cube { n },
            FamilyKind::Gasket { n } | FamilyKind::GluedGaskets { n } => GraphFamily::Gasket { n },
            FamilyKind::Carpet | FamilyKind::GluedCarpets => GraphFamily::Carpet,
        }
    }

    pub fn is_glued(&self) -> bool {
        matches!(
            self,
            FamilyKind::GluedCubes { .. } | FamilyKind::GluedGaskets { .. } | FamilyKind::GluedCarpets
        )
    }

    pub fn name(&self) -> String {
        let base = self.graph_family().name();
        if self.is_glued() {
            format!("glued_{base}")
        } else {
            base
        }
    }
}

/// The same space at several refinement levels, coarsest first.
#[derive(Clone, Debug)]
pub struct SpaceFamily {
    pub kind: FamilyKind,
    pub levels: Vec<u32>,
    pub spaces: Vec<Space>,
}

impl SpaceFamily {
    pub fn build(kind: FamilyKind, levels: &[u32]) -> Result<SpaceFamily> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("levels must be nonempty and strictly ascending"));
        }
        let spaces = levels.iter().map(|&m| kind.build(m)).collect::<Result<Vec<_>>>()?;
        Ok(SpaceFamily {
            kind,
            levels: levels.to_vec(),
            spaces,
        })
    }

    pub fn finest(&self) -> &Space {
        self.spaces.last().expect("family is nonempty")
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn refinement(&self) -> f64 {
        self.kind.refinement()
    }

    pub(crate) fn require_levels(&self, k: usize) -> Result<()> {
        if self.len() < k {
            return Err(Error::Resolution(format!(
                "need at least {k} refinement levels, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Growth of an energy sequence across refinement levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelGrowth {
    /// Exponent `b` in `E_{m+1} - E_m ~ L^{b m}`, clipped at zero.
    pub slope: f64,
    /// `log(E_last / E_prev) / log L` over the finest two levels.
    pub raw_slope: f64,
    pub finite: bool,
}

/// Level-growth slope of energies on consecutive levels with refinement
/// factor `l`. With three or more levels the last two increments are
/// compared, so a convergent sequence reads as slope zero while geometric
/// divergence `L^{bm}` reads as `b`; with two levels the raw slope is used.
pub fn level_growth(energies: &[f64], l: f64) -> Result<LevelGrowth> {
    let k = energies.len();
    if k < 2 {
        return Err(Error::Resolution("need energies on at least two levels".into()));
    }
    if energies.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::argument("energies must be finite and nonnegative"));
    }
    let (e1, e2) = (energies[k - 2], energies[k - 1]);
    let raw = if e1 > 0.0 && e2 > 0.0 {
        (e2 / e1).ln() / l.ln()
    } else if e2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let slope = if k >= 3 {
        let d1 = e1 - energies[k - 3];
        let d2 = e2 - e1;
        if d2 <= 0.0 {
            0.0
        } else if d1 <= 0.0 {
            raw.max(0.0)
        } else {
            ((d2 / d1).ln() / l.ln()).max(0.0)
        }
    } else {
        raw
    };
    Ok(LevelGrowth {
        slope,
        raw_slope: raw,
        finite: slope <= FINITE_SLOPE,
    })
}

/// Carries a set of atoms to another discretization by nearest atom.
pub fn transfer_set(from: &Space, members: &[bool], to: &Space) -> Result<Vec<bool>> {
    if members.len() != from.len() {
        return Err(Error::Binding(format!(
            "membership has {} entries, space has {} atoms",
            members.len(),
            from.len()
        )));
    }
    if from.dim() != to.dim() {
        return Err(Error::argument("spaces differ in ambient dimension"));
    }
    Ok((0..to.len()).map(|i| members[from.nearest_atom(to.point(i))]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_separate_convergence_from_divergence() {
        let conv: Vec<f64> = (0..4).map(|m| 2.0 - 3f64.powi(-m)).collect();
        assert_eq!(level_growth(&conv, 3.0).unwrap().slope, 0.0);
        let div: Vec<f64> = (0..4).map(|m| 3f64.powf(0.5 * m as f64)).collect();
        let g = level_growth(&div, 3.0).unwrap();
        assert!((g.slope - 0.5).abs() < 1e-12);
        assert!(!g.finite);
        let two = level_growth(&[1.0, 3.0], 3.0).unwrap();
        assert!((two.slope - 1.0).abs() < 1e-12);
        assert!(level_growth(&[1.0], 3.0).is_err());
    }

    #[test]
    fn glued_family_levels() {
        let f = SpaceFamily::build(FamilyKind::GluedCubes { n: 2 }, &[1, 2]).unwrap();
        assert_eq!(f.spaces[0].len(), 18);
        assert_eq!(f.finest().len(), 162);
        assert!((f.finest().total_mass() - 2.0).abs() < 1e-12);
        assert!(SpaceFamily::build(FamilyKind::Carpet, &[2, 1]).is_err());
    }

    #[test]
    fn transfer_keeps_labels() {
        let f = SpaceFamily::build(FamilyKind::GluedCubes { n: 2 }, &[1, 3]).unwrap();
        let (a, b) = (&f.spaces[0], &f.spaces[1]);
        let e1: Vec<bool> = (0..a.len()).map(|i| a.label(i) == Some("E1")).collect();
        let t = transfer_set(a, &e1, b).unwrap();
        for i in 0..b.len() {
            assert_eq!(t[i], b.label(i) == Some("E1"));
        }
    }
}
