use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_p_theta, FunctionOnSpace};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, Neumaier};
use crate::space::{pow_abs, Space};

/// Cross-component coupling around the glue point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IksProfile {
    pub p: f64,
    pub theta: f64,
    /// Exponent `d_f + p theta` of the radius normalization.
    pub normalization: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

fn glue_parts(space: &Space) -> Result<(Vec<f64>, Vec<bool>)> {
    let o = space
        .glue_point()
        .ok_or_else(|| Error::Precondition("space has no glue point".into()))?
        .to_vec();
    if space.indices_with_label("E1").is_empty() || space.indices_with_label("E2").is_empty() {
        return Err(Error::Precondition("space needs atoms labelled E1 and E2".into()));
    }
    let in_e1 = (0..space.len()).map(|i| space.label(i) == Some("E1")).collect();
    Ok((o, in_e1))
}

/// `I(r) = r^-(d_f + p theta) * sum_{x in E1 cap B(o,r)} sum_{y in E2 cap B(o,r)}
/// |u1(x) - u2(y)|^p w_x w_y`, with `d_f` the nominal dimension of the space.
pub fn cross_coupling_iks(
    space: &Space,
    u1: &FunctionOnSpace,
    u2: &FunctionOnSpace,
    p: f64,
    theta: f64,
    radii: &[f64],
) -> Result<IksProfile> {
    let d_f = space
        .nominal_dimension()
        .ok_or_else(|| Error::Precondition("space has no nominal dimension; pass one explicitly".into()))?;
    cross_coupling_iks_with_dimension(space, u1, u2, p, theta, radii, d_f)
}

pub fn cross_coupling_iks_with_dimension(
    space: &Space,
    u1: &FunctionOnSpace,
    u2: &FunctionOnSpace,
    p: f64,
    theta: f64,
    radii: &[f64],
    dimension: f64,
) -> Result<IksProfile> {
    u1.check(space)?;
    u2.check(space)?;
    check_p_theta(p, theta)?;
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::argument("radii must be positive"));
    }
    let (o, in_e1) = glue_parts(space)?;
    let w = space.weights();
    let normalization = dimension + p * theta;
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball: Vec<usize> = match space.index() {
            Some(idx) => idx.ball_indices(&o, r),
            None => return Err(Error::Precondition("coupling needs a Euclidean space".into())),
        };
        let (a, b): (Vec<usize>, Vec<usize>) = ball.into_iter().partition(|&i| in_e1[i]);
        let av: Vec<(f64, f64)> = a.iter().map(|&i| (u1.values()[i], w[i])).collect();
        let bv: Vec<(f64, f64)> = b.iter().map(|&i| (u2.values()[i], w[i])).collect();
        let s = pair_sum(&av, &bv, p);
        values.push(s / r.powf(normalization));
    }
    Ok(IksProfile {
        p,
        theta,
        normalization,
        radii: radii.to_vec(),
        values,
    })
}

/// `sum_{i,j} |a_i - b_j|^p w_i w_j`.
fn pair_sum(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let const_side = |v: &[(f64, f64)]| v.iter().all(|x| x.0 == v[0].0);
    if const_side(b) || const_side(a) {
        let (c, other, mass) = if const_side(b) {
            (b[0].0, a, compensated_sum(b.iter().map(|x| x.1)))
        } else {
            (a[0].0, b, compensated_sum(a.iter().map(|x| x.1)))
        };
        return mass * compensated_sum(other.iter().map(|(v, w)| w * pow_abs(v - c, p)));
    }
    if p == 2.0 {
        // centred moments avoid cancellation when the two sides nearly agree
        let wb = compensated_sum(b.iter().map(|x| x.1));
        let c = compensated_sum(b.iter().map(|x| x.0 * x.1)) / wb;
        let wa = compensated_sum(a.iter().map(|x| x.1));
        let (mut a1, mut a2, mut b2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
        for &(v, w) in a {
            a1.add(w * (v - c));
            a2.add(w * (v - c) * (v - c));
        }
        for &(v, w) in b {
            b2.add(w * (v - c) * (v - c));
        }
        // sum_b w (b - c) vanishes by the choice of c
        return wb * a2.value() + wa * b2.value();
    }
    let rows: Vec<f64> = a
        .par_iter()
        .map(|&(va, wa)| wa * compensated_sum(b.iter().map(|&(vb, wb)| wb * pow_abs(va - vb, p))))
        .collect();
    compensated_sum(rows)
}

/// `v = log(max(-log |x - o|, 1))` on `E1`, zero on `E2`.
pub fn loglog_witness(space: &Space) -> Result<FunctionOnSpace> {
    let (o, in_e1) = glue_parts(space)?;
    FunctionOnSpace::from_fn(space, |x, i| {
        if in_e1[i] {
            let r = crate::space::euclid(x, &o);
            (-r.ln()).max(1.0).ln()
        } else {
            0.0
        }
    })
}
