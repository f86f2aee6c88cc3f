//! Monotone operators with a stored convex potential, and structural checks
//! of the unregularized operator against a modular function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{conjugate_modular, modular, GridDomain, VectorField};
use crate::nfunc::{
    conjugate, default_nodes, directions, log_nodes, ConditionReport, ModularFunction,
    RadialProfile, Witness, XiSamples, DRIFT_TOL, GRID_HI, GRID_LO, GRID_NODES,
};

/// Continuation levels of the regularization when some exponent is below 2.
pub const EPS_LEVELS: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Monotone operator families with a convex potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OperatorFamily {
    /// `α(x)|ξ|^{p(x)−2}ξ`.
    WeightedPxLaplacian {
        exponent: crate::nfunc::FieldSpec,
        weight: crate::nfunc::FieldSpec,
    },
    /// `Σ_i α_i(x)|ξ_i|^{p_i(x)−2}ξ_i e_i`.
    AnisotropicPx {
        exponents: [crate::nfunc::FieldSpec; 2],
        weights: [crate::nfunc::FieldSpec; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub family: OperatorFamily,
    /// `|ξ|` is replaced by `√(|ξ|² + ε²)`.
    #[serde(default)]
    pub eps_reg: f64,
    #[serde(default = "one")]
    pub c_a: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug)]
enum Params {
    Iso { p: Vec<f64>, a: Vec<f64> },
    Aniso { p: [Vec<f64>; 2], a: [Vec<f64>; 2] },
}

/// An [`OperatorSpec`] with its fields sampled on the cells of a grid.
#[derive(Clone, Debug)]
pub struct Operator {
    spec: OperatorSpec,
    domain: GridDomain,
    params: Params,
}

fn validate(p: &[f64], a: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x > 1.0 && x.is_finite())) {
        return Err(Error::Parameter(
            "operator exponents must lie in (1, ∞)".into(),
        ));
    }
    if a.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Parameter(
            "operator weights must be positive and bounded".into(),
        ));
    }
    Ok(())
}

/// `((t² + ε²)^{p/2} − ε^p)/p` and its derivative factor `(t² + ε²)^{(p−2)/2}`.
#[inline]
fn reg_power(t2: f64, p: f64, eps: f64) -> (f64, f64) {
    let s = t2 + eps * eps;
    if s == 0.0 {
        return (0.0, if p >= 2.0 { 0.0 } else { f64::INFINITY });
    }
    let f = s.powf(0.5 * p - 1.0);
    let phi = if eps > 0.0 {
        // ε^p((1 + t²/ε²)^{p/2} − 1) without cancellation
        eps.powf(p) * (0.5 * p * (t2 / (eps * eps)).ln_1p()).exp_m1()
    } else {
        f * s
    };
    (phi / p, f)
}

impl Operator {
    pub fn new(spec: OperatorSpec, domain: GridDomain) -> Result<Self> {
        if !(spec.c_a > 0.0 && spec.c_a <= 1.0) {
            return Err(Error::Parameter(format!(
                "c_A = {} must lie in (0, 1]",
                spec.c_a
            )));
        }
        if !(spec.eps_reg >= 0.0 && spec.eps_reg.is_finite()) {
            return Err(Error::Parameter(
                "regularization must be nonnegative".into(),
            ));
        }
        let params = match &spec.family {
            OperatorFamily::WeightedPxLaplacian { exponent, weight } => {
                let p = exponent.sample_cells(&domain)?;
                let a = weight.sample_cells(&domain)?;
                validate(&p, &a)?;
                Params::Iso { p, a }
            }
            OperatorFamily::AnisotropicPx { exponents, weights } => {
                let p = [
                    exponents[0].sample_cells(&domain)?,
                    exponents[1].sample_cells(&domain)?,
                ];
                let a = [
                    weights[0].sample_cells(&domain)?,
                    weights[1].sample_cells(&domain)?,
                ];
                validate(&p[0], &a[0])?;
                validate(&p[1], &a[1])?;
                Params::Aniso { p, a }
            }
        };
        Ok(Operator {
            spec,
            domain,
            params,
        })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }
    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn c_a(&self) -> f64 {
        self.spec.c_a
    }

    pub fn min_exponent(&self) -> f64 {
        let m = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        match &self.params {
            Params::Iso { p, .. } => m(p),
            Params::Aniso { p, .. } => m(&p[0]).min(m(&p[1])),
        }
    }

    /// Regularization levels the solver walks through.
    pub fn continuation(&self) -> Vec<f64> {
        if self.min_exponent() < 2.0 {
            EPS_LEVELS
                .iter()
                .copied()
                .filter(|&e| e >= self.spec.eps_reg)
                .chain([self.spec.eps_reg])
                .fold(Vec::new(), |mut v, e| {
                    if v.last() != Some(&e) && e > 0.0 {
                        v.push(e);
                    }
                    v
                })
        } else {
            vec![self.spec.eps_reg]
        }
    }

    /// Potential `Φ_ε(x, ξ)` with `∂Φ_ε/∂ξ = A_ε(x, ξ)`.
    #[inline]
    pub fn potential(&self, cell: usize, xi: [f64; 2], eps: f64) -> f64 {
        match &self.params {
            Params::Iso { p, a } => {
                a[cell] * reg_power(xi[0] * xi[0] + xi[1] * xi[1], p[cell], eps).0
            }
            Params::Aniso { p, a } => {
                a[0][cell] * reg_power(xi[0] * xi[0], p[0][cell], eps).0
                    + a[1][cell] * reg_power(xi[1] * xi[1], p[1][cell], eps).0
            }
        }
    }

    /// `A_ε(x, ξ)`.
    #[inline]
    pub fn flux(&self, cell: usize, xi: [f64; 2], eps: f64) -> [f64; 2] {
        match &self.params {
            Params::Iso { p, a } => {
                if xi == [0.0, 0.0] {
                    return [0.0, 0.0];
                }
                let f = a[cell] * reg_power(xi[0] * xi[0] + xi[1] * xi[1], p[cell], eps).1;
                [f * xi[0], f * xi[1]]
            }
            Params::Aniso { p, a } => {
                let comp = |k: usize| {
                    if xi[k] == 0.0 {
                        0.0
                    } else {
                        a[k][cell] * reg_power(xi[k] * xi[k], p[k][cell], eps).1 * xi[k]
                    }
                };
                [comp(0), comp(1)]
            }
        }
    }

    /// `A(x, ξ)` entrywise, unregularized.
    pub fn apply(&self, xi: &VectorField) -> VectorField {
        self.apply_eps(xi, 0.0)
    }

    pub fn apply_eps(&self, xi: &VectorField, eps: f64) -> VectorField {
        let values = xi
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| self.flux(xi.cell_of(k), v, eps))
            .collect();
        VectorField::new(*xi.domain(), xi.layers(), values).expect("same shape")
    }
}

/// Fits the largest `c_A ≤ 1` with `A(x, ξ)·ξ ≥ c_A (M(x, ξ) + M*(x, A(x, ξ)))`.
/// Passes when the per-radius minimum of the ratio does not drift by more
/// than 5% across the bottom or the top decade of the radii.
pub fn coercivity_check(
    op: &Operator,
    m: &ModularFunction,
    samples: &XiSamples,
) -> Result<(ConditionReport, f64)> {
    if op.domain() != m.domain() {
        return Err(Error::DomainMismatch);
    }
    let radii = &samples.radii;
    let nr = radii.len();
    let dirs = samples.dirs();
    let eps = 0.0;
    let domain = m.domain();
    let per_cell: Vec<Vec<(f64, usize)>> = (0..domain.num_cells())
        .into_par_iter()
        .map(|c| {
            radii
                .iter()
                .map(|&r| {
                    let mut worst = (f64::INFINITY, 0);
                    for (d, e) in dirs.iter().enumerate() {
                        let xi = [r * e[0], r * e[1]];
                        let a = op.flux(c, xi, eps);
                        let lhs = a[0] * xi[0] + a[1] * xi[1];
                        let rhs = m.value(c, xi) + m.conj_value(c, a).unwrap_or(f64::INFINITY);
                        let q = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
                        if q < worst.0 {
                            worst = (q, d);
                        }
                    }
                    worst
                })
                .collect()
        })
        .collect();
    let mut q = vec![(f64::INFINITY, 0usize, 0usize); nr];
    for (c, row) in per_cell.iter().enumerate() {
        for (i, &(v, d)) in row.iter().enumerate() {
            if v < q[i].0 {
                q[i] = (v, c, d);
            }
        }
    }
    let c_a = q.iter().map(|x| x.0).fold(f64::INFINITY, f64::min).min(1.0);
    let mut report = ConditionReport::new("coercivity");
    report.samples = domain.num_cells() * dirs.len() * nr;
    report.constants.insert("c_a".into(), c_a);
    let bottom = radii
        .iter()
        .rposition(|&r| r <= 10.0 * radii[0] * (1.0 + 1e-12))
        .unwrap_or(0);
    let top = radii
        .iter()
        .position(|&r| r >= radii[nr - 1] / 10.0 * (1.0 - 1e-12))
        .unwrap_or(nr - 1);
    let tol = DRIFT_TOL;
    let mut fail_at = None;
    if !(c_a > 0.0) {
        fail_at = Some((q.iter().position(|x| !(x.0 > 0.0)).unwrap_or(0), 0.0));
    } else if q[0].0 < (1.0 - tol) * q[bottom].0 {
        fail_at = Some((0, (1.0 - tol) * q[bottom].0));
    } else if q[nr - 1].0 < (1.0 - tol) * q[top].0 {
        fail_at = Some((nr - 1, (1.0 - tol) * q[top].0));
    }
    if let Some((i, c_ref)) = fail_at {
        let (_, c, d) = q[i];
        let xi = [radii[i] * dirs[d][0], radii[i] * dirs[d][1]];
        let a = op.flux(c, xi, eps);
        report.fail(
            "coercivity",
            Witness {
                x: domain.cell_center(c),
                y: None,
                xi,
                lhs: c_ref * (m.value(c, xi) + m.conj_value(c, a).unwrap_or(f64::INFINITY)),
                rhs: a[0] * xi[0] + a[1] * xi[1],
                note: "c_A (M + M*(A)) against A·ξ".into(),
            },
        );
    }
    Ok((report, c_a))
}

/// Signs of `(A(x, ξ) − A(x, η))·(ξ − η)` on random pairs with components of
/// magnitude in `[1e-2, 1e2]`.
pub fn monotonicity_check(op: &Operator, pairs: usize, seed: u64) -> ConditionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = *op.domain();
    let eps = 0.0;
    let mut report = ConditionReport::new("monotonicity");
    report.samples = pairs;
    let draw = |rng: &mut ChaCha8Rng| {
        let mag = 10f64.powf(rng.gen_range(-2.0..2.0));
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        [mag * t.cos(), mag * t.sin()]
    };
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let c = rng.gen_range(0..domain.num_cells());
        let (xi, eta) = (draw(&mut rng), draw(&mut rng));
        let (a, b) = (op.flux(c, xi, eps), op.flux(c, eta, eps));
        let dot = (a[0] - b[0]) * (xi[0] - eta[0]) + (a[1] - b[1]) * (xi[1] - eta[1]);
        let scale =
            (a[0].hypot(a[1]) + b[0].hypot(b[1])) * ((xi[0] - eta[0]).hypot(xi[1] - eta[1]));
        let rel = dot / scale.max(f64::MIN_POSITIVE);
        worst = worst.min(rel);
        if rel < -1e-12 && report.pass {
            report.fail(
                "monotonicity",
                Witness {
                    x: domain.cell_center(c),
                    y: None,
                    xi,
                    lhs: 0.0,
                    rhs: dot,
                    note: format!("pair with η = {eta:?}"),
                },
            );
        }
    }
    report
        .constants
        .insert("min_relative_product".into(), worst);
    report
}

/// Both sides of `∫M*(x, A(x, η)) ≤ (2/c_A) ∫M(x, (2/c_A) η)`.
pub fn conjugate_flux_bound(
    op: &Operator,
    m: &ModularFunction,
    eta: &VectorField,
) -> Result<(f64, f64)> {
    let lhs = conjugate_modular(m, &op.apply(eta))?;
    let k = 2.0 / op.c_a();
    Ok((lhs, k * modular(m, &eta.scale(k))?))
}

/// `P(s) = max_{|ξ| = s} (inf_x M*(x, ·))*(ξ)` over 32 directions.
///
/// `M*` is tabulated on the range of slopes of `M` over the primal grid, so
/// that `P` is resolved on all of `[GRID_LO, GRID_HI]`.
pub fn growth_profile(m: &ModularFunction) -> Result<RadialProfile> {
    let nodes = default_nodes();
    let dirs = if m.is_isotropic() {
        vec![[1.0, 0.0]]
    } else {
        directions(32)
    };
    let domain = m.domain();
    let slope = |c: usize, e: [f64; 2], r: f64| {
        let g = m.grad(c, [r * e[0], r * e[1]]);
        g[0].hypot(g[1])
    };
    let mut per_dir = Vec::with_capacity(dirs.len());
    for e in &dirs {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for c in 0..domain.num_cells() {
            lo = lo.min(slope(c, *e, 0.5 * GRID_LO));
            hi = hi.max(slope(c, *e, 2.0 * GRID_HI));
        }
        let lo = if lo > 0.0 { lo.max(1e-300) } else { GRID_LO };
        let hi = if hi.is_finite() {
            hi.max(2.0 * lo).min(1e300)
        } else {
            1e300
        };
        let duals = log_nodes(lo, hi, GRID_NODES);
        let mut inf = vec![f64::INFINITY; duals.len()];
        for c in 0..domain.num_cells() {
            for (v, &t) in inf.iter_mut().zip(&duals) {
                *v = v.min(m.conj_value(c, [t * e[0], t * e[1]])?);
            }
        }
        let keep = inf.iter().position(|v| !v.is_finite()).unwrap_or(inf.len());
        per_dir.push(conjugate(&RadialProfile::new(
            duals[..keep].to_vec(),
            inf[..keep].to_vec(),
        )?));
    }
    let values = nodes
        .iter()
        .map(|&s| per_dir.iter().map(|p| p.eval(s)).fold(0.0, f64::max))
        .collect();
    RadialProfile::new(nodes, values)
}

/// Smallest `t` with `p(t) ≥ y` for a nondecreasing profile (linear beyond
/// the last node).
pub fn profile_inverse(p: &RadialProfile, y: f64) -> f64 {
    let (s, v) = (p.nodes(), p.values());
    if y <= v[0] {
        return s[0];
    }
    for i in 1..s.len() {
        if v[i] >= y {
            return s[i - 1] + (y - v[i - 1]) * (s[i] - s[i - 1]) / (v[i] - v[i - 1]);
        }
    }
    let n = s.len();
    let slope = (v[n - 1] - v[n - 2]) / (s[n - 1] - s[n - 2]);
    s[n - 1] + (y - v[n - 1]) / slope
}

/// Growth bound `|A(x, ξ)| ≤ 2 (P*)⁻¹((1/c_A) P((2/c_A)|ξ|))`.
pub fn flux_growth_check(
    op: &Operator,
    m: &ModularFunction,
    samples: &XiSamples,
) -> Result<ConditionReport> {
    let p = growth_profile(m)?;
    let p_star = conjugate(&p);
    let k = 2.0 / op.c_a();
    let domain = m.domain();
    let dirs = samples.dirs();
    let eps = 0.0;
    let mut report = ConditionReport::new("flux_growth");
    report.samples = domain.num_cells() * dirs.len() * samples.radii.len();
    let mut worst: f64 = 0.0;
    for c in 0..domain.num_cells() {
        for e in &dirs {
            for &r in &samples.radii {
                let xi = [r * e[0], r * e[1]];
                let a = op.flux(c, xi, eps);
                let lhs = a[0].hypot(a[1]);
                let rhs = 2.0 * profile_inverse(&p_star, p.eval(k * r) / op.c_a());
                worst = worst.max(lhs / rhs);
                if lhs > rhs * (1.0 + 1e-9) && report.pass {
                    report.fail(
                        "flux growth",
                        Witness {
                            x: domain.cell_center(c),
                            y: None,
                            xi,
                            lhs,
                            rhs,
                            note: "|A| against the P bound".into(),
                        },
                    );
                }
            }
        }
    }
    report.constants.insert("max_ratio".into(), worst);
    Ok(report)
}
