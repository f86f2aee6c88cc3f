//! Mollification on domains star-shaped about a ball.
//!
//! A field `ξ` on `Ω` is shrunk towards the center by `κ = 1 − 2δ/r`, so its
//! support lies in `κΩ`, and then convolved with `ρ_δ`:
//! `ξ_δ(x) = Σ_o ρ_δ(o) ξ̃(c + (x − o − c)/κ) h²` where `ξ̃` is the bilinear
//! interpolant extended by zero. The support of `ξ_δ` stays in
//! `κΩ + δB ⊂ Ω`, so Dirichlet data stays Dirichlet.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{
    gradient, modular, modular_convergence_test, ConvergenceTrace, GridDomain, ScalarField,
    VectorField,
};
use crate::nfunc::ModularFunction;

/// Samples of `ρ_δ(x) = ρ(x/δ)/δ²` with `ρ ∝ exp(−1/(1 − |x|²))` at grid
/// offsets, renormalized to unit discrete mass.
#[derive(Clone, Debug)]
pub struct Kernel {
    delta: f64,
    h: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Half-width of the stencil in cells.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Kernel value at offset `(a h, b h)`.
    pub fn weight(&self, a: i64, b: i64) -> f64 {
        let r = self.radius as i64;
        if a.abs() > r || b.abs() > r {
            return 0.0;
        }
        let n = 2 * r + 1;
        self.weights[((b + r) * n + a + r) as usize]
    }

    /// Nonzero taps `(a, b, ρ_δ(a h, b h) h²)`.
    pub fn taps(&self) -> Vec<(i64, i64, f64)> {
        let r = self.radius as i64;
        let h2 = self.h * self.h;
        let mut out = Vec::new();
        for b in -r..=r {
            for a in -r..=r {
                let w = self.weight(a, b);
                if w > 0.0 {
                    out.push((a, b, w * h2));
                }
            }
        }
        out
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.h * self.h
    }
}

pub fn standard_mollifier(delta: f64, domain: &GridDomain) -> Result<Kernel> {
    let h = domain.h();
    if !(delta > h) {
        return Err(Error::Resolution(format!(
            "mollifier radius {delta} must exceed the cell size {h}"
        )));
    }
    let radius = (delta / h).floor() as usize;
    let r = radius as i64;
    let n = 2 * radius + 1;
    let mut weights = vec![0.0; n * n];
    for b in -r..=r {
        for a in -r..=r {
            let t = ((a * a + b * b) as f64) * h * h / (delta * delta);
            if t < 1.0 {
                weights[((b + r) as usize) * n + (a + r) as usize] = (-1.0 / (1.0 - t)).exp();
            }
        }
    }
    let mass: f64 = weights.iter().sum::<f64>() * h * h;
    weights.iter_mut().for_each(|w| *w /= mass);
    Ok(Kernel {
        delta,
        h,
        radius,
        weights,
    })
}

fn shrink_factor(delta: f64, r: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < r / 4.0) {
        return Err(Error::Parameter(format!(
            "δ = {delta} must lie in (0, r/4) with r = {r}"
        )));
    }
    Ok(1.0 - 2.0 * delta / r)
}

/// Offset of layer `l` entries inside their cell, in units of `h`.
fn layer_offset(layer: usize, layers: usize) -> f64 {
    (layer + 1) as f64 / (layers + 1) as f64
}

/// Position of entry `k` of a layered field.
fn entry_point(domain: &GridDomain, layers: usize, k: usize) -> [f64; 2] {
    let cells = domain.num_cells();
    let (i, j) = domain.cell_ij(k % cells);
    let s = layer_offset(k / cells, layers);
    let [x0, _, y0, _] = domain.extent();
    let h = domain.h();
    [x0 + (i as f64 + s) * h, y0 + (j as f64 + s) * h]
}

/// Bilinear interpolation of one layer on its lattice of entry points,
/// extended by zero outside the grid.
fn sample_layer(xi: &VectorField, layer: usize, p: [f64; 2]) -> [f64; 2] {
    let d = xi.domain();
    let [x0, _, y0, _] = d.extent();
    let h = d.h();
    let s = layer_offset(layer, xi.layers());
    let u = (p[0] - x0) / h - s;
    let v = (p[1] - y0) / h - s;
    let (iu, iv) = (u.floor(), v.floor());
    let (fu, fv) = (u - iu, v - iv);
    let (nx, ny) = (d.nx() as i64, d.ny() as i64);
    let base = layer * d.num_cells();
    let vals = xi.values();
    let mut out = [0.0; 2];
    for (di, wu) in [(0, 1.0 - fu), (1, fu)] {
        for (dj, wv) in [(0, 1.0 - fv), (1, fv)] {
            let (i, j) = (iu as i64 + di, iv as i64 + dj);
            let w = wu * wv;
            if w == 0.0 || i < 0 || j < 0 || i >= nx || j >= ny {
                continue;
            }
            let e = vals[base + d.cell_index(i as usize, j as usize)];
            out[0] += w * e[0];
            out[1] += w * e[1];
        }
    }
    out
}

/// Star-shaped mollification of a cellwise field (each layer separately).
pub fn mollify_star(xi: &VectorField, delta: f64, r: f64) -> Result<VectorField> {
    let kappa = shrink_factor(delta, r)?;
    let domain = *xi.domain();
    let taps = standard_mollifier(delta, &domain)?.taps();
    let c = domain.center();
    let h = domain.h();
    let layers = xi.layers();
    let cells = domain.num_cells();
    let values: Vec<[f64; 2]> = (0..xi.values().len())
        .into_par_iter()
        .map(|k| {
            let x = entry_point(&domain, layers, k);
            let mut acc = [0.0; 2];
            for &(a, b, w) in &taps {
                let q = [
                    c[0] + (x[0] - a as f64 * h - c[0]) / kappa,
                    c[1] + (x[1] - b as f64 * h - c[1]) / kappa,
                ];
                let v = sample_layer(xi, k / cells, q);
                acc[0] += w * v[0];
                acc[1] += w * v[1];
            }
            acc
        })
        .collect();
    VectorField::new(domain, layers, values)
}

/// Star-shaped mollification of a nodal field.
pub fn mollify_star_scalar(u: &ScalarField, delta: f64, r: f64) -> Result<ScalarField> {
    let kappa = shrink_factor(delta, r)?;
    let domain = *u.domain();
    let taps = standard_mollifier(delta, &domain)?.taps();
    let c = domain.center();
    let h = domain.h();
    let values: Vec<f64> = (0..domain.num_nodes())
        .into_par_iter()
        .map(|n| {
            let x = domain.node_point(n);
            taps.iter()
                .map(|&(a, b, w)| {
                    let q = [
                        c[0] + (x[0] - a as f64 * h - c[0]) / kappa,
                        c[1] + (x[1] - b as f64 * h - c[1]) / kappa,
                    ];
                    w * u.interpolate(q)
                })
                .sum()
        })
        .collect();
    ScalarField::new(domain, values)
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::Input("empty δ list".into()));
    }
    Ok(())
}

/// `∫M(x, ξ_δ)/∫M(x, ξ)` per `δ` (series `modular_ratio`) and its maximum.
pub fn uniform_modular_bound_study(
    m: &ModularFunction,
    xi: &VectorField,
    deltas: &[f64],
    r: f64,
) -> Result<(ConvergenceTrace, f64)> {
    check_deltas(deltas)?;
    if xi.l1_norm() > 1.0 + 1e-12 {
        return Err(Error::Input(format!("‖ξ‖_L¹ = {} exceeds 1", xi.l1_norm())));
    }
    let base = modular(m, xi)?;
    if base == 0.0 {
        return Err(Error::Degenerate("∫M(x, ξ) vanishes".into()));
    }
    let mut trace = ConvergenceTrace::new("delta", deltas.to_vec())?;
    let mut mods = Vec::with_capacity(deltas.len());
    for &d in deltas {
        mods.push(modular(m, &mollify_star(xi, d, r)?)?);
    }
    let ratios: Vec<f64> = mods.iter().map(|v| v / base).collect();
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    trace.push("modular", mods);
    trace.push("modular_ratio", ratios);
    Ok((trace, sup))
}

/// Mollifies a bounded Dirichlet field `φ` for each `δ` and tests modular
/// convergence `∇φ_δ → ∇φ` over `lambdas`; the trace is indexed by `δ`.
pub fn approximation_study(
    m: &ModularFunction,
    phi: &ScalarField,
    deltas: &[f64],
    r: f64,
    lambdas: &[f64],
    tol: f64,
) -> Result<ConvergenceTrace> {
    check_deltas(deltas)?;
    if !phi.is_dirichlet() {
        return Err(Error::Input("φ must vanish on the boundary".into()));
    }
    if phi.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("φ must be bounded".into()));
    }
    let limit = gradient(phi);
    let seq: Vec<VectorField> = deltas
        .iter()
        .map(|&d| mollify_star_scalar(phi, d, r).map(|p| gradient(&p)))
        .collect::<Result<_>>()?;
    let inner = modular_convergence_test(m, &seq, &limit, lambdas, tol)?;
    let mut trace = ConvergenceTrace::new("delta", deltas.to_vec())?;
    trace.series = inner.series;
    trace.witness = inner.witness;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_has_unit_mass() {
        let k = standard_mollifier(0.1, &GridDomain::unit_square(64)).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert_eq!(k.radius(), 6);
        assert_eq!(k.weight(7, 0), 0.0);
    }

    #[test]
    fn shrink_needs_small_delta() {
        assert!(shrink_factor(0.2, 0.5).is_err());
        assert!(shrink_factor(0.0, 0.5).is_err());
        assert!((shrink_factor(0.1, 0.5).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn radius_below_cell_size_is_a_resolution_error() {
        assert!(matches!(
            standard_mollifier(0.01, &GridDomain::unit_square(16)),
            Err(Error::Resolution(_))
        ));
    }
}
