use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GridDomain, ScalarField};
use crate::nfunc::{Family, FieldSpec, ModularFunction};
use crate::solver::operator::{Operator, OperatorSpec};

/// Subsamples per side of the control-volume average at a singular point.
pub const SINGULAR_SUBSAMPLES: usize = 32;

/// Right-hand side `f`, sampled at grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Zero,
    Constant {
        value: f64,
    },
    Field {
        field: FieldSpec,
    },
    /// `scale · |x − center|^{−power}`. The grid point whose control volume
    /// holds `center` gets the 32×32 subsampled average over that volume.
    Singular {
        center: [f64; 2],
        #[serde(default = "one")]
        power: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `−div(α|∇u*|^{p−2}∇u*)` for `u* = sin(πX) sin(πY)` in coordinates
    /// rescaled to the unit square; needs `p ≥ 2`.
    Manufactured {
        exponent: f64,
        weight: f64,
    },
    /// One value per grid point.
    Values {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

/// `u* = sin(πX) sin(πY)` of [`SourceSpec::Manufactured`].
pub fn manufactured_solution(domain: &GridDomain) -> ScalarField {
    let [x0, _, y0, _] = domain.extent();
    let (w, h) = (domain.width(), domain.height());
    ScalarField::dirichlet_from_fn(*domain, |p| {
        (PI * (p[0] - x0) / w).sin() * (PI * (p[1] - y0) / h).sin()
    })
}

fn manufactured_source(p: f64, alpha: f64, domain: &GridDomain, x: [f64; 2]) -> f64 {
    let [x0, _, y0, _] = domain.extent();
    let (kx, ky) = (PI / domain.width(), PI / domain.height());
    let (sx, cx) = (kx * (x[0] - x0)).sin_cos();
    let (sy, cy) = (ky * (x[1] - y0)).sin_cos();
    let u = sx * sy;
    let grad = [kx * cx * sy, ky * sx * cy];
    let s = grad[0] * grad[0] + grad[1] * grad[1];
    let lap = -(kx * kx + ky * ky) * u;
    let ds = [
        2.0 * kx * (-kx * kx * sx * cx * sy * sy + ky * ky * sx * cx * cy * cy),
        2.0 * ky * (-ky * ky * sy * cy * sx * sx + kx * kx * sy * cy * cx * cx),
    ];
    let first = if s > 0.0 {
        s.powf(0.5 * p - 1.0) * lap
    } else if p == 2.0 {
        lap
    } else {
        0.0
    };
    let second = if s > 0.0 && p != 2.0 {
        (0.5 * p - 1.0) * s.powf(0.5 * p - 2.0) * (ds[0] * grad[0] + ds[1] * grad[1])
    } else {
        0.0
    };
    -alpha * (first + second)
}

impl SourceSpec {
    pub fn sample(&self, domain: &GridDomain) -> Result<ScalarField> {
        let field = match self {
            SourceSpec::Zero => ScalarField::zeros(*domain),
            SourceSpec::Constant { value } => ScalarField::from_fn(*domain, |_| *value),
            SourceSpec::Field { field } => {
                ScalarField::from_fn(*domain, |p| field.value_at(domain, p))
            }
            SourceSpec::Singular {
                center,
                power,
                scale,
            } => {
                if !(*power > 0.0 && *power < 2.0) {
                    return Err(Error::Parameter(format!(
                        "singular power {power} must lie in (0, 2)"
                    )));
                }
                let h = domain.h();
                let f =
                    |p: [f64; 2]| scale * (p[0] - center[0]).hypot(p[1] - center[1]).powf(-power);
                ScalarField::from_fn(*domain, |p| {
                    if (p[0] - center[0]).abs() <= 0.5 * h && (p[1] - center[1]).abs() <= 0.5 * h {
                        let n = SINGULAR_SUBSAMPLES;
                        let step = h / n as f64;
                        let mut acc = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                let q = [
                                    p[0] - 0.5 * h + (a as f64 + 0.5) * step,
                                    p[1] - 0.5 * h + (b as f64 + 0.5) * step,
                                ];
                                acc += f(q);
                            }
                        }
                        acc / (n * n) as f64
                    } else {
                        f(p)
                    }
                })
            }
            SourceSpec::Manufactured { exponent, weight } => {
                if !(*exponent >= 2.0) || !(*weight > 0.0) {
                    return Err(Error::Parameter(
                        "manufactured source needs p ≥ 2 and a positive weight".into(),
                    ));
                }
                ScalarField::from_fn(*domain, |p| {
                    manufactured_source(*exponent, *weight, domain, p)
                })
            }
            SourceSpec::Values { values } => return ScalarField::new(*domain, values.clone()),
        };
        if field.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("source has non-finite values".into()));
        }
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-norm of the weak-form residual accepted by the descent.
    #[serde(default = "default_solve_tol")]
    pub solve: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relative slack of the a priori bounds.
    #[serde(default = "default_apriori_tol")]
    pub apriori: f64,
    /// Cauchy tolerance of the pairing traces.
    #[serde(default = "default_cauchy_tol")]
    pub cauchy: f64,
}

fn default_solve_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    20_000
}
fn default_apriori_tol() -> f64 {
    1e-2
}
fn default_cauchy_tol() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: default_solve_tol(),
            max_iter: default_max_iter(),
            apriori: default_apriori_tol(),
            cauchy: default_cauchy_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    #[serde(default = "default_k")]
    pub k_values: Vec<f64>,
    /// Exponent of the successive-distance norm.
    #[serde(default = "default_lp")]
    pub lp: f64,
    /// Exponent `α > 1` of the lower envelope `m̲`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Number of `(h, φ)` pairs in the renormalized residual battery.
    #[serde(default = "default_battery")]
    pub battery: usize,
    /// Radiation levels `l = 0, 1, …, levels − 1`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn default_lp() -> f64 {
    2.0
}
fn default_alpha() -> f64 {
    4.0
}
fn default_battery() -> usize {
    20
}
fn default_levels() -> usize {
    32
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            k_values: default_k(),
            lp: default_lp(),
            alpha: default_alpha(),
            battery: default_battery(),
            levels: default_levels(),
            seed: 0,
        }
    }
}

/// `s = 2^0, …, 2^10`.
pub fn default_schedule() -> Vec<f64> {
    (0..=10).map(|j| 2f64.powi(j)).collect()
}

/// The JSON problem definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub domain: GridDomain,
    pub operator: OperatorSpec,
    pub modular: Family,
    pub source: SourceSpec,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<EllipticProblem> {
        let op = Operator::new(self.operator.clone(), self.domain)?;
        let m = ModularFunction::new(self.modular.clone(), self.domain)?;
        EllipticProblem::new(op, self.source.sample(&self.domain)?, m)
    }
}

/// `−div A(x, ∇u) = f` on a grid with zero boundary values, paired with the
/// modular function `M` of the growth conditions.
#[derive(Clone, Debug)]
pub struct EllipticProblem {
    pub operator: Operator,
    pub source: ScalarField,
    pub modular: ModularFunction,
}

impl EllipticProblem {
    pub fn new(operator: Operator, source: ScalarField, modular: ModularFunction) -> Result<Self> {
        if operator.domain() != source.domain() || operator.domain() != modular.domain() {
            return Err(Error::DomainMismatch);
        }
        Ok(EllipticProblem {
            operator,
            source,
            modular,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        self.operator.domain()
    }

    /// `‖f‖_{L¹}` with grid-point quadrature.
    pub fn source_l1(&self) -> f64 {
        self.source.l1_norm()
    }
}
