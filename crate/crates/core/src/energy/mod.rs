//! Discrete Besov `B^theta_{p,p}`, the multiscale functional
//! `E_theta(u,t)`, its Korevaar-Schoen tail and the derived ratios.

mod coupling;
pub mod io;
mod kernel;
pub mod oracle;
mod tail;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::space::Space;

pub use coupling::{cross_coupling_iks, cross_coupling_iks_with_dimension, loglog_witness, IksProfile};
pub use kernel::{besov_pp, besov_pp_batch, default_radii, multiscale_energy, multiscale_energy_with};
pub use kernel::{multiscale_profiles, scale_sums, KernelStrategy, ProfileOptions};
pub use tail::{besov_pinfty_energy, ks_energy_tail, sobolev_ratio, wmax_ratio};
pub use tail::{KsTail, RatioFlag, RatioReport, ScalingFit, TailClass, DEFAULT_TAIL_FRACTION};
pub(crate) use kernel::validate_radii;

/// Real values on the atoms of one particular space.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionOnSpace {
    space_id: Option<u64>,
    values: Vec<f64>,
}

impl FunctionOnSpace {
    pub fn new(space: &Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Binding(format!(
                "function has {} values but the space has {} atoms",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("function values must be finite"));
        }
        Ok(FunctionOnSpace {
            space_id: Some(space.id()),
            values,
        })
    }

    /// Evaluates `f(coordinates, index)` at every atom.
    pub fn from_fn(space: &Space, f: impl Fn(&[f64], usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(|i| f(space.point(i), i)).collect();
        Self::new(space, values)
    }

    pub fn constant(space: &Space, c: f64) -> Result<Self> {
        Self::new(space, vec![c; space.len()])
    }

    /// Values not yet attached to any space; every energy call rejects them.
    pub fn unbound(values: Vec<f64>) -> Self {
        FunctionOnSpace { space_id: None, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space_id(&self) -> Option<u64> {
        self.space_id
    }

    pub fn check(&self, space: &Space) -> Result<()> {
        match self.space_id {
            None => Err(Error::Binding("function is not bound to a space".into())),
            Some(id) if id != space.id() => Err(Error::Binding("function is bound to a different space".into())),
            Some(_) if self.values.len() != space.len() => Err(Error::Binding("length mismatch".into())),
            Some(_) => Ok(()),
        }
    }

    /// Same binding, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Binding("length mismatch".into()));
        }
        Ok(FunctionOnSpace {
            space_id: self.space_id,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FunctionOnSpace {
            space_id: self.space_id,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Mass-weighted mean.
    pub fn mean(&self, space: &Space) -> f64 {
        compensated_sum(self.values.iter().zip(space.weights()).map(|(v, w)| v * w)) / space.total_mass()
    }

    /// `(sum_x w_x |u(x)|^p)^(1/p)`.
    pub fn lp_norm(&self, space: &Space, p: f64) -> f64 {
        compensated_sum(
            self.values
                .iter()
                .zip(space.weights())
                .map(|(v, w)| w * crate::space::pow_abs(*v, p)),
        )
        .powf(1.0 / p)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// Sampled multiscale energy `E_theta(u, t)` on a decreasing radius grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub p: f64,
    pub theta: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub besov_pp: Option<f64>,
    pub dyadic_sum: Option<f64>,
    pub dyadic_radii: Vec<f64>,
}

/// Truncation `max(alpha, min(beta, u))` with `alpha <= 0 <= beta`.
pub fn normal_contraction(u: &FunctionOnSpace, alpha: f64, beta: f64) -> Result<FunctionOnSpace> {
    if alpha.is_nan() || beta.is_nan() || alpha > 0.0 || beta < 0.0 {
        return Err(Error::argument("contraction needs alpha <= 0 <= beta"));
    }
    Ok(u.map(|v| v.min(beta).max(alpha)))
}

/// Pointwise product of two functions bound to the same space.
pub fn product(u: &FunctionOnSpace, v: &FunctionOnSpace) -> Result<FunctionOnSpace> {
    match (u.space_id, v.space_id) {
        (Some(a), Some(b)) if a == b && u.values.len() == v.values.len() => {}
        _ => return Err(Error::Binding("product of functions on different spaces".into())),
    }
    u.with_values(u.values.iter().zip(&v.values).map(|(a, b)| a * b).collect())
}

pub(crate) fn check_p_theta(p: f64, theta: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::argument(format!("p must be finite and at least 1, got {p}")));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::argument(format!("theta must be positive, got {theta}")));
    }
    Ok(())
}
