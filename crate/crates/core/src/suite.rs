//! Built-in analytic constrained problems with known optima.
//!
//! | name                  | D       | constraints                         | optimum                         |
//! |-----------------------|---------|-------------------------------------|---------------------------------|
//! | `sphere`              | any     | none                                | 0 at the origin                 |
//! | `sphere-linear-ineq`  | any     | `D - Σx <= 0`                       | D at `x_i = 1`                  |
//! | `sphere-eq`           | any     | `Σx - 1 = 0`                        | 1/D at `x_i = 1/D`              |
//! | `rosenbrock-cubic-line` | 2     | `(x-1)^3 - y + 1 <= 0`, `x + y - 2 <= 0` | 0 at (1, 1)                |
//! | `rastrigin-box-linear`| any     | `1 - x_1 <= 0`                      | 1 at (1, 0, ..., 0)             |
//! | `mixed-eq-ineq`       | >= 2    | `Σx - 1 = 0`, `0.5 - x_1 <= 0`, `x_2 - x_1 <= 0` | 1/4 + 1/(4(D-1))   |
//!
//! Equality constraints are returned raw; the tolerance is applied only by
//! the violation measure.

use std::f64::consts::PI;

use crate::constraint::{mean_violation, ViolationConfig};
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, RawEvaluation};

#[derive(Debug, Clone)]
pub struct ProblemEntry {
    pub spec: ProblemSpec,
    pub known_optimum_f: Option<f64>,
    pub known_optimizer: Option<Vec<f64>>,
    pub feasible_fraction_hint: Option<f64>,
}

/// Registry metadata, independent of the dimension.
#[derive(Debug, Clone, Copy)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub dims: DimSupport,
    pub summary: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimSupport {
    Any,
    AtLeast(usize),
    Exactly(usize),
}

impl DimSupport {
    pub fn accepts(self, dim: usize) -> bool {
        match self {
            DimSupport::Any => dim >= 1,
            DimSupport::AtLeast(k) => dim >= k,
            DimSupport::Exactly(k) => dim == k,
        }
    }
}

impl std::fmt::Display for DimSupport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DimSupport::Any => write!(f, "D>=1"),
            DimSupport::AtLeast(k) => write!(f, "D>={k}"),
            DimSupport::Exactly(k) => write!(f, "D={k}"),
        }
    }
}

const REGISTRY: &[ProblemInfo] = &[
    ProblemInfo { name: "sphere", dims: DimSupport::Any, summary: "min Σx², unconstrained; f* = 0" },
    ProblemInfo {
        name: "sphere-linear-ineq",
        dims: DimSupport::Any,
        summary: "min Σx² s.t. Σx >= D; f* = D at x_i = 1",
    },
    ProblemInfo {
        name: "sphere-eq",
        dims: DimSupport::Any,
        summary: "min Σx² s.t. Σx = 1; f* = 1/D at x_i = 1/D",
    },
    ProblemInfo {
        name: "rosenbrock-cubic-line",
        dims: DimSupport::Exactly(2),
        summary: "Rosenbrock s.t. (x-1)³ - y + 1 <= 0, x + y <= 2; f* = 0 at (1,1)",
    },
    ProblemInfo {
        name: "rastrigin-box-linear",
        dims: DimSupport::Any,
        summary: "Rastrigin s.t. x_1 >= 1; f* = 1 at (1,0,...,0)",
    },
    ProblemInfo {
        name: "mixed-eq-ineq",
        dims: DimSupport::AtLeast(2),
        summary: "min Σx² s.t. Σx = 1, x_1 >= 0.5, x_2 <= x_1; f* = 1/4 + 1/(4(D-1))",
    },
];

/// Registered problems in a stable order.
pub fn list_problems() -> Vec<&'static str> {
    REGISTRY.iter().map(|p| p.name).collect()
}

pub fn problem_info() -> &'static [ProblemInfo] {
    REGISTRY
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn get_problem(name: &str, dim: usize) -> Result<ProblemEntry> {
    let info = REGISTRY
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    if !info.dims.accepts(dim) {
        return Err(Error::UnsupportedDimension { name: name.to_string(), dim });
    }
    let d = dim as f64;
    let sphere_box = || (vec![-5.0; dim], vec![5.0; dim]);
    let mut entry = match name {
        "sphere" => {
            let (lo, hi) = sphere_box();
            ProblemEntry {
                spec: ProblemSpec::new(name, lo, hi, 0, 0, |x| RawEvaluation::unconstrained(sum_sq(x)))?,
                known_optimum_f: Some(0.0),
                known_optimizer: Some(vec![0.0; dim]),
                feasible_fraction_hint: Some(1.0),
            }
        }
        "sphere-linear-ineq" => {
            let (lo, hi) = sphere_box();
            ProblemEntry {
                spec: ProblemSpec::new(name, lo, hi, 1, 0, move |x| {
                    RawEvaluation::new(sum_sq(x), vec![d - x.iter().sum::<f64>()], vec![])
                })?,
                known_optimum_f: Some(d),
                known_optimizer: Some(vec![1.0; dim]),
                feasible_fraction_hint: None,
            }
        }
        "sphere-eq" => {
            let (lo, hi) = sphere_box();
            ProblemEntry {
                spec: ProblemSpec::new(name, lo, hi, 0, 1, |x| {
                    RawEvaluation::new(sum_sq(x), vec![], vec![x.iter().sum::<f64>() - 1.0])
                })?,
                known_optimum_f: Some(1.0 / d),
                known_optimizer: Some(vec![1.0 / d; dim]),
                feasible_fraction_hint: Some(0.0),
            }
        }
        "rosenbrock-cubic-line" => ProblemEntry {
            spec: ProblemSpec::new(name, vec![-1.5, -0.5], vec![1.5, 2.5], 2, 0, |x| {
                let (a, b) = (x[0], x[1]);
                RawEvaluation::new(
                    (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                    vec![(a - 1.0).powi(3) - b + 1.0, a + b - 2.0],
                    vec![],
                )
            })?,
            known_optimum_f: Some(0.0),
            known_optimizer: Some(vec![1.0, 1.0]),
            feasible_fraction_hint: None,
        },
        "rastrigin-box-linear" => {
            let (lo, hi) = sphere_box();
            let mut opt = vec![0.0; dim];
            opt[0] = 1.0;
            ProblemEntry {
                spec: ProblemSpec::new(name, lo, hi, 1, 0, |x| {
                    let f = x.iter().map(|&v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum();
                    RawEvaluation::new(f, vec![1.0 - x[0]], vec![])
                })?,
                known_optimum_f: Some(1.0),
                known_optimizer: Some(opt),
                feasible_fraction_hint: Some(0.4),
            }
        }
        "mixed-eq-ineq" => {
            let (lo, hi) = sphere_box();
            let rest = 0.5 / (d - 1.0);
            let mut opt = vec![rest; dim];
            opt[0] = 0.5;
            ProblemEntry {
                spec: ProblemSpec::new(name, lo, hi, 2, 1, |x| {
                    RawEvaluation::new(sum_sq(x), vec![0.5 - x[0], x[1] - x[0]], vec![x.iter().sum::<f64>() - 1.0])
                })?,
                known_optimum_f: Some(0.25 + 0.25 / (d - 1.0)),
                known_optimizer: Some(opt),
                feasible_fraction_hint: Some(0.0),
            }
        }
        _ => unreachable!("registry and constructors out of sync: {name}"),
    };
    if let Some(f) = entry.known_optimum_f {
        entry.spec = entry.spec.with_reference_optimum(f);
    }
    Ok(entry)
}

/// Evaluates the stored optimizer: it must be feasible (φ = 0 under the
/// default tolerance) and reproduce the stored optimum within 1e-9.
pub fn verify_optimum(entry: &ProblemEntry) -> Result<bool> {
    let x = entry.known_optimizer.as_ref().ok_or(Error::MissingOptimizer)?;
    let f_star = entry.known_optimum_f.ok_or(Error::MissingOptimizer)?;
    if !entry.spec.in_bounds(x)? {
        return Ok(false);
    }
    let raw = entry.spec.evaluate_unmetered(x)?;
    let phi = mean_violation(&raw, &ViolationConfig::default());
    Ok(phi == 0.0 && (raw.objective - f_star).abs() <= 1e-9)
}
