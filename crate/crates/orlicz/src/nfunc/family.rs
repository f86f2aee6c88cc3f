use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::GridDomain;
use crate::nfunc::profile::{conjugate, RadialProfile};

/// Scalar parameter field over a [`GridDomain`], sampled at cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// `base + dx·x + dy·y`.
    Affine {
        base: f64,
        dx: f64,
        dy: f64,
    },
    /// `base + amplitude / ln(e²·scale / |x − center|)`; `scale` must be at
    /// least the largest distance to `center`. The modulus of continuity is
    /// `amplitude / ln(1/|x − y|)`.
    LogHolder {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        scale: f64,
    },
    /// `low`/`high` on alternating tiles of a `tiles × tiles` board.
    Checkerboard {
        low: f64,
        high: f64,
        tiles: usize,
    },
    /// `low` for `x < at`, `high` otherwise.
    Step {
        low: f64,
        high: f64,
        at: f64,
    },
    /// `base + amplitude · sin(πX) sin(πY)` in coordinates rescaled to the unit square.
    Bump {
        base: f64,
        amplitude: f64,
    },
    /// One value per cell.
    Values {
        values: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Constant { value }
    }

    /// Value at point `p` of `domain`; `Values` uses the containing cell.
    pub fn value_at(&self, domain: &GridDomain, p: [f64; 2]) -> f64 {
        let [x0, x1, y0, y1] = domain.extent();
        match self {
            FieldSpec::Constant { value } => *value,
            FieldSpec::Affine { base, dx, dy } => base + dx * p[0] + dy * p[1],
            FieldSpec::LogHolder {
                base,
                amplitude,
                center,
                scale,
            } => {
                let d = (p[0] - center[0]).hypot(p[1] - center[1]);
                if d == 0.0 {
                    *base
                } else {
                    base + amplitude / (E * E * scale / d).ln()
                }
            }
            FieldSpec::Checkerboard { low, high, tiles } => {
                let n = *tiles as f64;
                let a = ((p[0] - x0) / (x1 - x0) * n).floor() as i64;
                let b = ((p[1] - y0) / (y1 - y0) * n).floor() as i64;
                if (a + b).rem_euclid(2) == 0 {
                    *low
                } else {
                    *high
                }
            }
            FieldSpec::Step { low, high, at } => {
                if p[0] < *at {
                    *low
                } else {
                    *high
                }
            }
            FieldSpec::Bump { base, amplitude } => {
                let u = (p[0] - x0) / (x1 - x0);
                let v = (p[1] - y0) / (y1 - y0);
                base + amplitude * (PI * u).sin() * (PI * v).sin()
            }
            FieldSpec::Values { values } => values[domain.locate_cell(p)],
        }
    }

    pub fn sample_cells(&self, domain: &GridDomain) -> Result<Vec<f64>> {
        if let FieldSpec::LogHolder { center, scale, .. } = self {
            let [x0, x1, y0, y1] = domain.extent();
            let far = [[x0, y0], [x0, y1], [x1, y0], [x1, y1]]
                .iter()
                .map(|c| (c[0] - center[0]).hypot(c[1] - center[1]))
                .fold(0.0, f64::max);
            if far > *scale {
                return Err(Error::Parameter(format!(
                    "log-Hölder scale {scale} is below the distance {far} to the far corner"
                )));
            }
        }
        if let FieldSpec::Values { values } = self {
            if values.len() != domain.num_cells() {
                return Err(Error::Input(format!(
                    "expected {} cell values, got {}",
                    domain.num_cells(),
                    values.len()
                )));
            }
        }
        let v: Vec<f64> = (0..domain.num_cells())
            .map(|c| self.value_at(domain, domain.cell_center(c)))
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite parameter value".into()));
        }
        Ok(v)
    }
}

fn one() -> FieldSpec {
    FieldSpec::Constant { value: 1.0 }
}

/// The implemented N-function families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Family {
    /// `w(x)|ξ|^{p(x)}`, divided by `p(x)` when `normalized`.
    VariableExponentPower {
        exponent: FieldSpec,
        #[serde(default = "one")]
        weight: FieldSpec,
        #[serde(default)]
        normalized: bool,
    },
    /// `|ξ|^p + a(x)|ξ|^q` with `1 < p ≤ q`.
    DoublePhase { p: f64, q: f64, weight: FieldSpec },
    /// `a(x)(exp|ξ| − 1 + |ξ|)`.
    ExpType { weight: FieldSpec },
    /// `Σ_i α_i(x)|ξ_i|^{p_i(x)}`.
    AnisotropicSum {
        exponents: [FieldSpec; 2],
        weights: [FieldSpec; 2],
    },
    /// `w(x) m_k(|ξ|)` with `m_k` the profile of the angular sector holding
    /// `ξ`; sectors split `[0, π)` evenly and are reused for `−ξ`.
    Tabulated {
        sectors: Vec<RadialProfile>,
        #[serde(default = "one")]
        weight: FieldSpec,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::VariableExponentPower { .. } => "VariableExponentPower",
            Family::DoublePhase { .. } => "DoublePhase",
            Family::ExpType { .. } => "ExpType",
            Family::AnisotropicSum { .. } => "AnisotropicSum",
            Family::Tabulated { .. } => "Tabulated",
        }
    }
}

#[derive(Clone, Debug)]
enum Cells {
    Power {
        p: Vec<f64>,
        c: Vec<f64>,
    },
    Double {
        p: f64,
        q: f64,
        a: Vec<f64>,
    },
    Exp {
        a: Vec<f64>,
    },
    Aniso {
        p: [Vec<f64>; 2],
        a: [Vec<f64>; 2],
    },
    Table {
        w: Vec<f64>,
        conj: Option<RadialProfile>,
    },
}

/// An evaluable `M(x, ξ)` with its parameters sampled on the cells of a grid.
#[derive(Clone, Debug)]
pub struct ModularFunction {
    family: Family,
    domain: GridDomain,
    cells: Cells,
}

impl PartialEq for ModularFunction {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.domain == other.domain
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    family: String,
    params: serde_json::Value,
    grid: GridDomain,
}

impl Serialize for ModularFunction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let tagged = serde_json::to_value(&self.family).map_err(serde::ser::Error::custom)?;
        let wire = Wire {
            family: self.family.name().to_string(),
            params: tagged
                .get("params")
                .cloned()
                .unwrap_or(serde_json::Value::Null),
            grid: self.domain,
        };
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ModularFunction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = Wire::deserialize(de)?;
        let tagged = serde_json::json!({ "family": wire.family, "params": wire.params });
        let family: Family = serde_json::from_value(tagged).map_err(serde::de::Error::custom)?;
        ModularFunction::new(family, wire.grid).map_err(serde::de::Error::custom)
    }
}

fn check_exponents(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(x > 1.0) || !x.is_finite()) {
        return Err(Error::Parameter(format!("{what} must lie in (1, ∞)")));
    }
    Ok(())
}

fn check_positive(a: &[f64], what: &str) -> Result<()> {
    if a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Parameter(format!("{what} must be positive")));
    }
    Ok(())
}

/// Conjugate of `c·r^p` at `t ≥ 0`.
fn power_conj(c: f64, p: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r = (t / (c * p)).powf(1.0 / (p - 1.0));
    r * t * (1.0 - 1.0 / p)
}

fn powr(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.powf(p)
    }
}

impl ModularFunction {
    pub fn new(family: Family, domain: GridDomain) -> Result<Self> {
        let cells = match &family {
            Family::VariableExponentPower {
                exponent,
                weight,
                normalized,
            } => {
                let p = exponent.sample_cells(&domain)?;
                check_exponents(&p, "exponent")?;
                let w = weight.sample_cells(&domain)?;
                check_positive(&w, "weight")?;
                let c = w
                    .iter()
                    .zip(&p)
                    .map(|(w, p)| if *normalized { w / p } else { *w })
                    .collect();
                Cells::Power { p, c }
            }
            Family::DoublePhase { p, q, weight } => {
                if !(*p > 1.0 && q >= p && q.is_finite()) {
                    return Err(Error::Parameter("double phase needs 1 < p ≤ q < ∞".into()));
                }
                let a = weight.sample_cells(&domain)?;
                if a.iter().any(|&x| x < 0.0) {
                    return Err(Error::Parameter(
                        "double phase weight must be nonnegative".into(),
                    ));
                }
                Cells::Double { p: *p, q: *q, a }
            }
            Family::ExpType { weight } => {
                let a = weight.sample_cells(&domain)?;
                check_positive(&a, "weight")?;
                Cells::Exp { a }
            }
            Family::AnisotropicSum { exponents, weights } => {
                let p = [
                    exponents[0].sample_cells(&domain)?,
                    exponents[1].sample_cells(&domain)?,
                ];
                let a = [
                    weights[0].sample_cells(&domain)?,
                    weights[1].sample_cells(&domain)?,
                ];
                for k in 0..2 {
                    check_exponents(&p[k], "exponent")?;
                    check_positive(&a[k], "weight")?;
                }
                Cells::Aniso { p, a }
            }
            Family::Tabulated { sectors, weight } => {
                if sectors.is_empty() {
                    return Err(Error::Input(
                        "tabulated family needs at least one sector".into(),
                    ));
                }
                let w = weight.sample_cells(&domain)?;
                check_positive(&w, "weight")?;
                let conj = (sectors.len() == 1).then(|| conjugate(&sectors[0]));
                Cells::Table { w, conj }
            }
        };
        Ok(ModularFunction {
            family,
            domain,
            cells,
        })
    }

    /// `|ξ|^{p(x)}` (or `|ξ|^{p(x)}/p(x)` when `normalized`).
    pub fn power(exponent: FieldSpec, normalized: bool, domain: GridDomain) -> Result<Self> {
        ModularFunction::new(
            Family::VariableExponentPower {
                exponent,
                weight: one(),
                normalized,
            },
            domain,
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// True when `M(x, ξ)` depends on `ξ` only through `|ξ|`.
    pub fn is_isotropic(&self) -> bool {
        match &self.family {
            Family::AnisotropicSum { .. } => false,
            Family::Tabulated { sectors, .. } => sectors.len() == 1,
            _ => true,
        }
    }

    /// Radial section `r ↦ M(x, r e)` for isotropic families.
    fn radial(&self, cell: usize, r: f64) -> f64 {
        match &self.cells {
            Cells::Power { p, c } => c[cell] * powr(r, p[cell]),
            Cells::Double { p, q, a } => powr(r, *p) + a[cell] * powr(r, *q),
            Cells::Exp { a } => a[cell] * (r.exp_m1() + r),
            Cells::Table { w, .. } => match &self.family {
                Family::Tabulated { sectors, .. } => w[cell] * sectors[0].eval(r),
                _ => unreachable!(),
            },
            Cells::Aniso { .. } => unreachable!(),
        }
    }

    fn radial_slope(&self, cell: usize, r: f64) -> f64 {
        match &self.cells {
            Cells::Power { p, c } => c[cell] * p[cell] * powr(r, p[cell] - 1.0),
            Cells::Double { p, q, a } => p * powr(r, p - 1.0) + a[cell] * q * powr(r, q - 1.0),
            Cells::Exp { a } => a[cell] * (r.exp() + 1.0),
            Cells::Table { w, .. } => match &self.family {
                Family::Tabulated { sectors, .. } => w[cell] * sectors[0].slope(r),
                _ => unreachable!(),
            },
            Cells::Aniso { .. } => unreachable!(),
        }
    }

    /// `M(x, ξ)` at cell `cell`, without input checks.
    pub fn value(&self, cell: usize, xi: [f64; 2]) -> f64 {
        match &self.cells {
            Cells::Aniso { p, a } => {
                a[0][cell] * powr(xi[0].abs(), p[0][cell])
                    + a[1][cell] * powr(xi[1].abs(), p[1][cell])
            }
            Cells::Table { w, .. } => {
                let Family::Tabulated { sectors, .. } = &self.family else {
                    unreachable!()
                };
                let r = xi[0].hypot(xi[1]);
                w[cell] * sectors[sector_of(xi, sectors.len())].eval(r)
            }
            _ => self.radial(cell, xi[0].hypot(xi[1])),
        }
    }

    /// `M(x, ξ)` with input validation.
    pub fn eval(&self, cell: usize, xi: [f64; 2]) -> Result<f64> {
        if cell >= self.domain.num_cells() {
            return Err(Error::Input(format!("cell {cell} outside the grid")));
        }
        if !xi[0].is_finite() || !xi[1].is_finite() {
            return Err(Error::Input("non-finite ξ".into()));
        }
        Ok(self.value(cell, xi))
    }

    /// `∂M/∂ξ` (zero at `ξ = 0`; right slopes for tabulated profiles).
    pub fn grad(&self, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        match &self.cells {
            Cells::Aniso { p, a } => {
                let g = |k: usize| {
                    let x = xi[k];
                    a[k][cell] * p[k][cell] * powr(x.abs(), p[k][cell] - 1.0) * x.signum()
                };
                [g(0), g(1)]
            }
            Cells::Table { .. } if !self.is_isotropic() => {
                let Family::Tabulated { sectors, .. } = &self.family else {
                    unreachable!()
                };
                let Cells::Table { w, .. } = &self.cells else {
                    unreachable!()
                };
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    return [0.0; 2];
                }
                let d = w[cell] * sectors[sector_of(xi, sectors.len())].slope(r) / r;
                [d * xi[0], d * xi[1]]
            }
            _ => {
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    return [0.0; 2];
                }
                let d = self.radial_slope(cell, r) / r;
                [d * xi[0], d * xi[1]]
            }
        }
    }

    /// Conjugate `M*(x, η)` in closed form (a scalar root for double phase,
    /// the discrete conjugate for a single-sector tabulation).
    pub fn conj_value(&self, cell: usize, eta: [f64; 2]) -> Result<f64> {
        let t = eta[0].hypot(eta[1]);
        Ok(match &self.cells {
            Cells::Power { p, c } => power_conj(c[cell], p[cell], t),
            Cells::Double { p, q, a } => double_phase_conj(*p, *q, a[cell], t),
            Cells::Exp { a } => {
                let a = a[cell];
                if t <= 2.0 * a {
                    0.0
                } else {
                    let r = (t / a - 1.0).ln();
                    r * (t - a) - t + 2.0 * a
                }
            }
            Cells::Aniso { p, a } => {
                power_conj(a[0][cell], p[0][cell], eta[0].abs())
                    + power_conj(a[1][cell], p[1][cell], eta[1].abs())
            }
            Cells::Table { w, conj } => match conj {
                Some(c) => w[cell] * c.eval(t / w[cell]),
                None => {
                    return Err(Error::UnsupportedFamily(
                        "conjugate of a multi-sector tabulation is not available".into(),
                    ))
                }
            },
        })
    }

    /// Sampled radial section `r ↦ M(x, r·dir)` on `nodes`.
    pub fn section(&self, cell: usize, dir: [f64; 2], nodes: &[f64]) -> Result<RadialProfile> {
        RadialProfile::from_fn_on(nodes, |r| self.value(cell, [r * dir[0], r * dir[1]]))
    }

    /// `ln M(x, ξ)`, finite where `M` itself overflows (exp-type family).
    pub fn ln_value(&self, cell: usize, xi: [f64; 2]) -> f64 {
        if let Cells::Exp { a } = &self.cells {
            let r = xi[0].hypot(xi[1]);
            if r > 30.0 {
                return a[cell].ln() + r + ((r - 1.0) * (-r).exp()).ln_1p();
            }
        }
        self.value(cell, xi).ln()
    }
}

fn sector_of(xi: [f64; 2], sectors: usize) -> usize {
    let mut theta = xi[1].atan2(xi[0]);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    ((theta / PI * sectors as f64) as usize).min(sectors - 1)
}

/// Conjugate of `r^p + a r^q` at `t`: the maximizer solves
/// `p r^{p−1} + a q r^{q−1} = t`, found by safeguarded Newton.
fn double_phase_conj(p: f64, q: f64, a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let f = |r: f64| p * powr(r, p - 1.0) + a * q * powr(r, q - 1.0) - t;
    let df = |r: f64| p * (p - 1.0) * powr(r, p - 2.0) + a * q * (q - 1.0) * powr(r, q - 2.0);
    // bracket: the p-term alone gives an upper bound
    let mut lo = 0.0;
    let mut hi = (t / p).powf(1.0 / (p - 1.0));
    let mut r = hi;
    for _ in 0..200 {
        let fr = f(r);
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let step = fr / df(r);
        let mut next = r - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * r.max(1e-300) {
            r = next;
            break;
        }
        r = next;
    }
    (r * t - powr(r, p) - a * powr(r, q)).max(0.0)
}
