use crate::error::{Error, Result};
use crate::fields::{Density, VectorField};
use crate::nfunc::ModularFunction;

/// Bracket expansion limit of the Luxemburg bisection.
pub const BRACKET_CAP: usize = 60;

fn check_domain(m: &ModularFunction, xi: &VectorField) -> Result<()> {
    if m.domain() != xi.domain() {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// `∫_Ω M(x, ξ(x)) dx` by the midpoint rule on cells.
pub fn modular(m: &ModularFunction, xi: &VectorField) -> Result<f64> {
    Ok(modular_density(m, xi)?.integral())
}

/// Per-entry values `M(x, ξ)` with their quadrature weights.
pub fn modular_density(m: &ModularFunction, xi: &VectorField) -> Result<Density> {
    check_domain(m, xi)?;
    let w = xi.entry_weight();
    let values: Vec<f64> = xi
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| m.value(xi.cell_of(k), v))
        .collect();
    let weights = vec![w; values.len()];
    Ok(Density { values, weights })
}

/// `∫_Ω M*(x, η(x)) dx`.
pub fn conjugate_modular(m: &ModularFunction, eta: &VectorField) -> Result<f64> {
    check_domain(m, eta)?;
    let mut s = 0.0;
    for (k, &v) in eta.values().iter().enumerate() {
        s += m.conj_value(eta.cell_of(k), v)?;
    }
    Ok(s * eta.entry_weight())
}

/// Smallest `λ` with `rho(λ) ≤ 1` up to relative `tol`, where `rho` is
/// nonincreasing in `λ` (a modular of `ξ/λ`).
pub fn luxemburg(rho: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let within = |lam: f64| {
        let r = rho(lam);
        r.is_finite() && r <= 1.0
    };
    let (mut lo, mut hi);
    if within(1.0) {
        hi = 1.0;
        lo = 0.5;
        let mut n = 0;
        while within(lo) {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > 4 * BRACKET_CAP {
                // ρ(λ) ≤ 1 for every λ we can represent: the field vanishes.
                return Ok(0.0);
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        let mut n = 1;
        while !within(hi) {
            if n >= BRACKET_CAP {
                return Err(Error::Divergence { doublings: n });
            }
            lo = hi;
            hi *= 2.0;
            n += 1;
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if within(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Luxemburg norm `inf{λ > 0 : ∫M(x, ξ/λ) ≤ 1}`.
pub fn luxemburg_norm(m: &ModularFunction, xi: &VectorField, tol: f64) -> Result<f64> {
    check_domain(m, xi)?;
    if xi.values().iter().all(|v| v[0] == 0.0 && v[1] == 0.0) {
        return Ok(0.0);
    }
    let w = xi.entry_weight();
    luxemburg(
        |lam| {
            let inv = 1.0 / lam;
            xi.values()
                .iter()
                .enumerate()
                .map(|(k, v)| m.value(xi.cell_of(k), [v[0] * inv, v[1] * inv]))
                .sum::<f64>()
                * w
        },
        tol,
    )
}

fn conjugate_norm(m: &ModularFunction, eta: &VectorField, tol: f64) -> Result<f64> {
    check_domain(m, eta)?;
    if eta.values().iter().all(|v| v[0] == 0.0 && v[1] == 0.0) {
        return Ok(0.0);
    }
    // fail early on families without a conjugate
    m.conj_value(0, [0.0, 0.0])?;
    let w = eta.entry_weight();
    luxemburg(
        |lam| {
            let inv = 1.0 / lam;
            eta.values()
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    m.conj_value(eta.cell_of(k), [v[0] * inv, v[1] * inv])
                        .unwrap_or(f64::INFINITY)
                })
                .sum::<f64>()
                * w
        },
        tol,
    )
}

/// `2‖ξ‖_M ‖η‖_{M*} − |∫ ξ·η|`, nonnegative by the Hölder inequality.
pub fn holder_gap(m: &ModularFunction, xi: &VectorField, eta: &VectorField) -> Result<f64> {
    xi.check_compatible(eta)?;
    let tol = 1e-12;
    let a = luxemburg_norm(m, xi, tol)?;
    let b = conjugate_norm(m, eta, tol)?;
    Ok(2.0 * a * b - xi.dot_integral(eta)?.abs())
}
