//! Declarative test functions that can be evaluated on any level of a family.

use serde::{Deserialize, Serialize};

use crate::energy::{loglog_witness, FunctionOnSpace};
use crate::error::{Error, Result};
use crate::exponents::{build_graph, cube_graph, p_capacity, CapacityOptions, GraphFamily};
use crate::space::{euclid, Construction, Space};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub spec: FunctionSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// One on atoms carrying `label`, zero elsewhere.
    Indicator {
        label: String,
    },
    Coordinate {
        axis: usize,
        #[serde(default)]
        label: Option<String>,
    },
    /// `max(1 - |x - center| / radius, 0)`.
    Cone {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        label: Option<String>,
    },
    /// `exp(1 - 1 / (1 - |x - center|^2 / radius^2))` inside the ball.
    Bump {
        center: Vec<f64>,
        radius: f64,
    },
    /// One on the open ball.
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
    },
    /// `log(max(-log |x - o|, 1))` on `E1`, zero on `E2`.
    LogLog,
    /// Discrete `p`-harmonic capacity potential of each piece, from the
    /// graph approximation matching the construction.
    Harmonic {
        p: f64,
    },
    Combination {
        terms: Vec<Term>,
    },
}

fn masked(space: &Space, label: &Option<String>, i: usize) -> bool {
    label.as_deref().map_or(true, |l| space.label(i) == Some(l))
}

fn check_center(space: &Space, center: &[f64], radius: f64) -> Result<()> {
    if center.len() != space.dim() {
        return Err(Error::argument(format!(
            "center has {} coordinates, space has dimension {}",
            center.len(),
            space.dim()
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::argument("radius must be positive"));
    }
    Ok(())
}

impl FunctionSpec {
    /// Short identifier used in evidence tables.
    pub fn name(&self) -> String {
        let pt = |c: &[f64]| c.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
        match self {
            FunctionSpec::Constant { value } => format!("constant({value})"),
            FunctionSpec::Indicator { label } => format!("indicator({label})"),
            FunctionSpec::Coordinate { axis, label: None } => format!("x{axis}"),
            FunctionSpec::Coordinate { axis, label: Some(l) } => format!("x{axis}|{l}"),
            FunctionSpec::Cone { center, radius, .. } => format!("cone({};{radius})", pt(center)),
            FunctionSpec::Bump { center, radius } => format!("bump({};{radius})", pt(center)),
            FunctionSpec::BallIndicator { center, radius } => format!("ball({};{radius})", pt(center)),
            FunctionSpec::LogLog => "loglog".into(),
            FunctionSpec::Harmonic { p } => format!("harmonic({p})"),
            FunctionSpec::Combination { terms } => terms
                .iter()
                .map(|t| format!("{}*{}", t.coef, t.spec.name()))
                .collect::<Vec<_>>()
                .join("+"),
        }
    }

    pub fn generate(&self, space: &Space) -> Result<FunctionOnSpace> {
        match self {
            FunctionSpec::Constant { value } => FunctionOnSpace::constant(space, *value),
            FunctionSpec::Indicator { label } => {
                if space.indices_with_label(label).is_empty() {
                    return Err(Error::argument(format!("no atom carries label {label:?}")));
                }
                FunctionOnSpace::from_fn(space, |_, i| if space.label(i) == Some(label) { 1.0 } else { 0.0 })
            }
            FunctionSpec::Coordinate { axis, label } => {
                if *axis >= space.dim() {
                    return Err(Error::argument(format!("axis {axis} out of range")));
                }
                FunctionOnSpace::from_fn(space, |x, i| if masked(space, label, i) { x[*axis] } else { 0.0 })
            }
            FunctionSpec::Cone { center, radius, label } => {
                check_center(space, center, *radius)?;
                FunctionOnSpace::from_fn(space, |x, i| {
                    if masked(space, label, i) {
                        (1.0 - euclid(x, center) / radius).max(0.0)
                    } else {
                        0.0
                    }
                })
            }
            FunctionSpec::Bump { center, radius } => {
                check_center(space, center, *radius)?;
                FunctionOnSpace::from_fn(space, |x, _| {
                    let s = euclid(x, center) / radius;
                    if s < 1.0 {
                        (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                })
            }
            FunctionSpec::BallIndicator { center, radius } => {
                check_center(space, center, *radius)?;
                FunctionOnSpace::from_fn(space, |x, _| if euclid(x, center) < *radius { 1.0 } else { 0.0 })
            }
            FunctionSpec::LogLog => loglog_witness(space),
            FunctionSpec::Harmonic { p } => FunctionOnSpace::new(space, harmonic_values(space.construction(), *p)?),
            FunctionSpec::Combination { terms } => {
                let mut acc = vec![0.0; space.len()];
                for t in terms {
                    let f = t.spec.generate(space)?;
                    acc.iter_mut().zip(f.values()).for_each(|(a, v)| *a += t.coef * v);
                }
                FunctionOnSpace::new(space, acc)
            }
        }
    }
}

fn harmonic_values(c: &Construction, p: f64) -> Result<Vec<f64>> {
    let opts = CapacityOptions::default();
    match c {
        Construction::CubeGrid { n, level, base } => {
            let g = cube_graph(*n, (*base as usize).pow(*level), *level)?;
            Ok(p_capacity(&g, p, &opts)?.minimizer)
        }
        Construction::Carpet { level } => {
            let g = build_graph(GraphFamily::Carpet, *level)?;
            Ok(p_capacity(&g, p, &opts)?.minimizer)
        }
        Construction::Gasket { n, level } => {
            let g = build_graph(GraphFamily::Gasket { n: *n }, *level)?;
            let u = p_capacity(&g, p, &opts)?.minimizer;
            let cells = g.cells.as_ref().expect("gasket graphs carry cells");
            Ok(cells
                .iter()
                .map(|c| c.iter().map(|&v| u[v as usize]).sum::<f64>() / c.len() as f64)
                .collect())
        }
        Construction::Glued { a, b, .. } => {
            let mut v = harmonic_values(a, p)?;
            v.extend(harmonic_values(b, p)?);
            Ok(v)
        }
        Construction::Custom => Err(Error::Precondition(
            "harmonic functions need a space with a known construction".into(),
        )),
    }
}
