use serde::{Deserialize, Serialize};

use super::kernel::{multiscale_energy_with, ProfileOptions};
use super::{EnergyProfile, FunctionOnSpace};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, fit_line};
use crate::space::{pow_abs, Space};

/// Share of the smallest radii treated as the small-scale tail.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
const MIN_RADII: usize = 8;
const MIN_DECADES: f64 = 2.0;
const MIN_TAIL_POINTS: usize = 4;
const VANISHING_R2: f64 = 0.9;
const FLAT_SLOPE: f64 = 0.1;

/// Power law `E ~ C t^alpha` fitted on a radius window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl ScalingFit {
    /// Fits `log values` against `log radii`, ignoring zero values.
    pub fn fit(radii: &[f64], values: &[f64]) -> Option<ScalingFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = radii
            .iter()
            .zip(values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln()))
            .unzip();
        let f = fit_line(&xs, &ys)?;
        let t_min = xs.iter().copied().fold(f64::INFINITY, f64::min).exp();
        let t_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
        Some(ScalingFit {
            alpha: f.slope,
            log_constant: f.intercept,
            r_squared: f.r_squared,
            t_min,
            t_max,
            points: xs.len(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    /// `alpha > 0` with a good fit, or an identically zero tail.
    Vanishing,
    /// `|alpha| <= 0.1` with positive tail values.
    Positive,
    /// `alpha < -0.1`.
    Divergent,
    Indeterminate,
}

/// Small-scale behaviour of a profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KsTail {
    /// Largest profile value on the tail window.
    pub energy: f64,
    /// Smallest profile value on the tail window.
    pub floor: f64,
    pub fit: Option<ScalingFit>,
    pub class: TailClass,
    pub window: usize,
}

/// `B_{p,infinity}` energy: the supremum of the sampled profile.
pub fn besov_pinfty_energy(profile: &EnergyProfile) -> f64 {
    profile.values.iter().copied().fold(0.0, f64::max)
}

fn tail_window(profile: &EnergyProfile, tail_fraction: f64) -> Result<usize> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::argument("tail fraction must lie in (0, 1]"));
    }
    let n = profile.radii.len();
    if n < MIN_RADII {
        return Err(Error::Resolution(format!("profile has {n} radii, need {MIN_RADII}")));
    }
    let span = (profile.radii[0] / profile.radii[n - 1]).log10();
    if span < MIN_DECADES - 1e-9 {
        return Err(Error::Resolution(format!(
            "profile spans {span:.2} decades, need {MIN_DECADES}"
        )));
    }
    Ok(((tail_fraction * n as f64).ceil() as usize).clamp(MIN_TAIL_POINTS, n))
}

/// Tail statistic and power-law classification of the smallest radii.
pub fn ks_energy_tail(profile: &EnergyProfile, tail_fraction: f64) -> Result<KsTail> {
    let k = tail_window(profile, tail_fraction)?;
    let n = profile.radii.len();
    let radii = &profile.radii[n - k..];
    let values = &profile.values[n - k..];
    let energy = values.iter().copied().fold(0.0, f64::max);
    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
    if energy == 0.0 {
        return Ok(KsTail {
            energy,
            floor,
            fit: None,
            class: TailClass::Vanishing,
            window: k,
        });
    }
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    let fit = if positive >= MIN_TAIL_POINTS {
        ScalingFit::fit(radii, values)
    } else {
        None
    };
    let class = match &fit {
        Some(f) if f.alpha > 0.0 && f.r_squared >= VANISHING_R2 => TailClass::Vanishing,
        Some(f) if f.alpha.abs() <= FLAT_SLOPE && positive == k => TailClass::Positive,
        Some(f) if f.alpha < -FLAT_SLOPE => TailClass::Divergent,
        _ => TailClass::Indeterminate,
    };
    Ok(KsTail {
        energy,
        floor,
        fit,
        class,
        window: k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioFlag {
    Finite,
    Infinite,
    /// Both numerator and denominator vanish.
    Degenerate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub flag: RatioFlag,
}

fn ratio(numerator: f64, denominator: f64, forced_infinite: bool) -> RatioReport {
    let (ratio, flag) = if numerator == 0.0 && denominator == 0.0 {
        (1.0, RatioFlag::Degenerate)
    } else if numerator == 0.0 {
        (0.0, RatioFlag::Finite)
    } else if forced_infinite || denominator == 0.0 {
        (f64::INFINITY, RatioFlag::Infinite)
    } else {
        (numerator / denominator, RatioFlag::Finite)
    };
    RatioReport {
        ratio,
        numerator,
        denominator,
        flag,
    }
}

/// `sup_t E_theta(u,t)` over the Korevaar-Schoen tail energy. Infinite when
/// the tail vanishes while the supremum does not.
pub fn wmax_ratio(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64, radii: &[f64]) -> Result<RatioReport> {
    let prof = multiscale_energy_with(space, u, p, theta, radii, &ProfileOptions::profile_only())?;
    let sup = besov_pinfty_energy(&prof);
    let tail = ks_energy_tail(&prof, DEFAULT_TAIL_FRACTION)?;
    Ok(ratio(sup, tail.energy, sup > 0.0 && tail.class == TailClass::Vanishing))
}

/// `||u - mean(u)||_p^p` over the smallest tail value of the profile.
pub fn sobolev_ratio(space: &Space, u: &FunctionOnSpace, p: f64, theta: f64, radii: &[f64]) -> Result<RatioReport> {
    let prof = multiscale_energy_with(space, u, p, theta, radii, &ProfileOptions::profile_only())?;
    let tail = ks_energy_tail(&prof, DEFAULT_TAIL_FRACTION)?;
    let mean = u.mean(space);
    let num = compensated_sum(
        u.values()
            .iter()
            .zip(space.weights())
            .map(|(v, w)| w * pow_abs(v - mean, p)),
    );
    let den = if tail.floor.is_finite() { tail.floor } else { 0.0 };
    Ok(ratio(num, den, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{default_radii, multiscale_energy};
    use crate::space::{glue_at_point, make_cube_grid};

    fn synthetic(alpha: f64) -> EnergyProfile {
        let radii = crate::numeric::log_radii(1.0, 1e-3, 8);
        let values = radii.iter().map(|t| 3.0 * t.powf(alpha)).collect();
        EnergyProfile {
            p: 2.0,
            theta: 1.0,
            radii,
            values,
            besov_pp: None,
            dyadic_sum: None,
            dyadic_radii: vec![],
        }
    }

    #[test]
    fn classification_follows_the_slope() {
        assert_eq!(ks_energy_tail(&synthetic(0.5), 0.5).unwrap().class, TailClass::Vanishing);
        assert_eq!(ks_energy_tail(&synthetic(-0.05), 0.5).unwrap().class, TailClass::Positive);
        assert_eq!(ks_energy_tail(&synthetic(-0.7), 0.5).unwrap().class, TailClass::Divergent);
        let f = ks_energy_tail(&synthetic(0.5), 0.5).unwrap().fit.unwrap();
        assert!((f.alpha - 0.5).abs() < 1e-12);
        assert!((f.log_constant - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn short_profiles_are_resolution_errors() {
        let mut p = synthetic(0.5);
        p.radii.truncate(7);
        p.values.truncate(7);
        assert!(matches!(ks_energy_tail(&p, 0.5), Err(Error::Resolution(_))));
        let mut q = synthetic(0.5);
        q.radii.truncate(12);
        q.values.truncate(12);
        assert!(matches!(ks_energy_tail(&q, 0.5), Err(Error::Resolution(_))));
    }

    #[test]
    fn constant_function_tail_vanishes() {
        let q = make_cube_grid(2, 5, 3).unwrap();
        let c = FunctionOnSpace::constant(&q, 1.0).unwrap();
        let prof = multiscale_energy(&q, &c, 2.0, 1.0, &default_radii(&q)).unwrap();
        let t = ks_energy_tail(&prof, 0.5).unwrap();
        assert_eq!(t.class, TailClass::Vanishing);
        assert_eq!(t.energy, 0.0);
        let w = wmax_ratio(&q, &c, 2.0, 1.0, &default_radii(&q)).unwrap();
        assert_eq!(w.flag, RatioFlag::Degenerate);
        let s = sobolev_ratio(&q, &c, 2.0, 1.0, &default_radii(&q)).unwrap();
        assert_eq!(s.flag, RatioFlag::Degenerate);
    }

    #[test]
    fn indicator_on_bow_tie_has_infinite_wmax_ratio() {
        let q = make_cube_grid(2, 4, 3).unwrap();
        let x = glue_at_point(&q, 0, &q, 0, false).unwrap();
        let u = FunctionOnSpace::from_fn(&x, |_, i| if x.label(i) == Some("E1") { 1.0 } else { 0.0 }).unwrap();
        let radii = default_radii(&x);
        let w = wmax_ratio(&x, &u, 1.5, 1.1, &radii).unwrap();
        assert_eq!(w.flag, RatioFlag::Infinite);
    }

    #[test]
    fn smooth_function_at_theta_one_has_positive_tail() {
        let q = make_cube_grid(1, 6, 3).unwrap();
        let u = FunctionOnSpace::from_fn(&q, |x, _| x[0] + 0.5 * x[0] * x[0]).unwrap();
        let radii = default_radii(&q);
        let prof = multiscale_energy(&q, &u, 2.0, 1.0, &radii).unwrap();
        assert_eq!(ks_energy_tail(&prof, 0.5).unwrap().class, TailClass::Positive);
    }

    #[test]
    fn smooth_function_wmax_ratio_is_bounded_across_levels() {
        let mut ratios = Vec::new();
        for m in 5..=7 {
            let q = make_cube_grid(1, m, 3).unwrap();
            let u = FunctionOnSpace::from_fn(&q, |x, _| (2.0 * x[0]).sin() + x[0] * x[0]).unwrap();
            let w = wmax_ratio(&q, &u, 2.0, 1.0, &default_radii(&q)).unwrap();
            assert_eq!(w.flag, RatioFlag::Finite);
            ratios.push(w.ratio);
        }
        assert!(ratios.iter().all(|&r| r < 5.0), "{ratios:?}");
    }
}
