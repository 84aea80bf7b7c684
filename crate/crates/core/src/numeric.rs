//! Small numerical helpers: compensated sums, least squares on log scales,
//! radius grids.

use serde::{Deserialize, Serialize};

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = compensated_sum(xs.iter().copied()) / nf;
    let my = compensated_sum(ys.iter().copied()) / nf;
    let mut sxx = Neumaier::new();
    let mut sxy = Neumaier::new();
    let mut syy = Neumaier::new();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx.add((x - mx) * (x - mx));
        sxy.add((x - mx) * (y - my));
        syy.add((y - my) * (y - my));
    }
    let (sxx, sxy, syy) = (sxx.value(), sxy.value(), syy.value());
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = compensated_sum(xs.iter().zip(ys).map(|(&x, &y)| {
        let r = y - (intercept + slope * x);
        r * r
    }));
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * nf {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Strictly decreasing log-spaced radii from `t_max` down to no less than `t_min`.
pub fn log_radii(t_max: f64, t_min: f64, per_decade: usize) -> Vec<f64> {
    let per_decade = per_decade.max(1) as f64;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t_max * 10f64.powf(-(k as f64) / per_decade);
        if t < t_min * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

/// Relative difference `|a-b| / max(|a|,|b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radii_are_decreasing_and_bounded() {
        let r = log_radii(1.0, 0.01, 16);
        assert_eq!(r.len(), 33);
        assert!(r.windows(2).all(|w| w[0] > w[1]));
        assert!(*r.last().unwrap() >= 0.01 * (1.0 - 1e-12));
    }
}
