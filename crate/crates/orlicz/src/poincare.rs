//! Empirical modular Poincaré constants `∫m(|g|) ≤ c ∫m(|∇g|)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{gradient, ConvergenceTrace, GridDomain, ScalarField};
use crate::nfunc::RadialProfile;

/// `(∫m(|g|), ∫m(|∇g|))` with nodal and per-triangle quadrature.
pub fn poincare_integrals(m: impl Fn(f64) -> f64, g: &ScalarField) -> (f64, f64) {
    let num = g.integral_of(|v| m(v.abs()));
    let grad = gradient(g);
    let w = grad.entry_weight();
    let den = grad
        .values()
        .iter()
        .map(|v| m(v[0].hypot(v[1])))
        .sum::<f64>()
        * w;
    (num, den)
}

/// `∫m(|g|)/∫m(|∇g|)` for a Dirichlet field `g`.
pub fn poincare_ratio(m: &RadialProfile, g: &ScalarField) -> Result<f64> {
    poincare_ratio_with(|t| m.eval(t), g)
}

pub fn poincare_ratio_with(m: impl Fn(f64) -> f64, g: &ScalarField) -> Result<f64> {
    if !g.is_dirichlet() {
        return Err(Error::Input("g must vanish on the boundary".into()));
    }
    let (num, den) = poincare_integrals(m, g);
    if !(den > 0.0) {
        return Err(Error::Degenerate("∫m(|∇g|) vanishes".into()));
    }
    Ok(num / den)
}

/// Test fields in coordinates `X, Y ∈ [0, 1]` rescaled from the domain, so a
/// dilated domain sees the dilated fields.
#[derive(Clone, Debug, PartialEq)]
pub enum Candidate {
    Mode {
        k: u32,
        l: u32,
    },
    Pyramid,
    /// `min(1, dist(x, ∂Ω)/(width · short edge))`.
    Plateau {
        width: f64,
    },
    /// `(1 − |x − c|/radius)⁺` with `radius` relative to the short edge.
    Cone {
        center: [f64; 2],
        radius: f64,
    },
    SineSeries {
        coeffs: Vec<f64>,
        order: u32,
    },
}

impl Candidate {
    pub fn label(&self) -> String {
        match self {
            Candidate::Mode { k, l } => format!("mode_{k}_{l}"),
            Candidate::Pyramid => "pyramid".into(),
            Candidate::Plateau { width } => format!("plateau_{width}"),
            Candidate::Cone { center, radius } => {
                format!("cone_{:.3}_{:.3}_{radius}", center[0], center[1])
            }
            Candidate::SineSeries { .. } => "sine_series".into(),
        }
    }

    pub fn sample(&self, domain: &GridDomain) -> ScalarField {
        let [x0, _, y0, _] = domain.extent();
        let (w, h) = (domain.width(), domain.height());
        let short = w.min(h);
        ScalarField::dirichlet_from_fn(*domain, |p| {
            let (u, v) = ((p[0] - x0) / w, (p[1] - y0) / h);
            match self {
                Candidate::Mode { k, l } => (*k as f64 * PI * u).sin() * (*l as f64 * PI * v).sin(),
                Candidate::Pyramid => u.min(1.0 - u).min(v).min(1.0 - v),
                Candidate::Plateau { width } => {
                    let d = (p[0] - x0)
                        .min(x0 + w - p[0])
                        .min(p[1] - y0)
                        .min(y0 + h - p[1]);
                    (d / (width * short)).min(1.0)
                }
                Candidate::Cone { center, radius } => {
                    let c = [x0 + center[0] * w, y0 + center[1] * h];
                    (1.0 - (p[0] - c[0]).hypot(p[1] - c[1]) / (radius * short)).max(0.0)
                }
                Candidate::SineSeries { coeffs, order } => {
                    let n = *order as usize;
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            s += coeffs[a * n + b]
                                * ((a + 1) as f64 * PI * u).sin()
                                * ((b + 1) as f64 * PI * v).sin();
                        }
                    }
                    s
                }
            }
        })
    }
}

/// Eigenmodes, tents and plateaus first, then seeded random sine series.
pub fn candidate_battery(size: usize, seed: u64) -> Vec<Candidate> {
    let mut out = vec![
        Candidate::Mode { k: 1, l: 1 },
        Candidate::Pyramid,
        Candidate::Plateau { width: 0.25 },
        Candidate::Plateau { width: 0.125 },
        Candidate::Plateau { width: 0.0625 },
        Candidate::Mode { k: 2, l: 1 },
        Candidate::Mode { k: 1, l: 2 },
        Candidate::Cone {
            center: [0.5, 0.5],
            radius: 0.5,
        },
        Candidate::Cone {
            center: [0.3, 0.6],
            radius: 0.25,
        },
        Candidate::Cone {
            center: [0.75, 0.25],
            radius: 0.125,
        },
        Candidate::Mode { k: 2, l: 2 },
    ];
    out.truncate(size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < size {
        let order = 4u32;
        let coeffs = (0..order * order)
            .map(|i| {
                let (a, b) = ((i / order + 1) as f64, (i % order + 1) as f64);
                rng.gen_range(-1.0..1.0) / (a * a + b * b)
            })
            .collect();
        out.push(Candidate::SineSeries { coeffs, order });
    }
    out
}

/// Largest observed ratio over a battery, with the constant produced by
/// the cube-embedding argument for comparison.
#[derive(Clone, Debug)]
pub struct PoincareEstimate {
    pub estimate: f64,
    pub argmax: usize,
    pub labels: Vec<String>,
    /// Index: candidate number; series `ratio`.
    pub trace: ConvergenceTrace,
    /// Doubling constant `sup m(2t)/m(t)` of the profile.
    pub doubling: f64,
    /// Doublings needed to absorb `2√N·diam Ω`.
    pub chain_steps: u32,
    /// `doubling^chain_steps`.
    pub chain_value: f64,
}

/// Doubling constant of `m` over the nodes `t` with `2t` still tabulated.
pub fn doubling_constant(m: &RadialProfile) -> f64 {
    let last = m.last_node();
    m.nodes()
        .iter()
        .filter(|&&t| t > 0.0 && 2.0 * t <= last)
        .map(|&t| {
            let v = m.eval(t);
            if v > 0.0 {
                m.eval(2.0 * t) / v
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest `k` with `2√N·diam(Ω) < 2^k` in two dimensions.
pub fn chain_steps(domain: &GridDomain) -> u32 {
    let scale = 2.0 * 2f64.sqrt() * domain.diameter();
    let mut k = 0;
    while 2f64.powi(k as i32) <= scale {
        k += 1;
    }
    k
}

pub fn poincare_constant_estimate(
    m: &RadialProfile,
    domain: &GridDomain,
    battery: usize,
    seed: u64,
) -> Result<PoincareEstimate> {
    if battery == 0 {
        return Err(Error::Input("empty test-field battery".into()));
    }
    let doubling = doubling_constant(m);
    if !doubling.is_finite() {
        return Err(Error::Parameter(
            "profile does not satisfy a doubling bound".into(),
        ));
    }
    let cands = candidate_battery(battery, seed);
    let mut ratios = Vec::with_capacity(battery);
    for c in &cands {
        ratios.push(poincare_ratio(m, &c.sample(domain))?);
    }
    let (argmax, estimate) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |a, (i, r)| if r > a.1 { (i, r) } else { a },
            );
    let mut trace = ConvergenceTrace::new("candidate", (1..=battery).map(|i| i as f64).collect())?;
    trace.push("ratio", ratios);
    let k = chain_steps(domain);
    Ok(PoincareEstimate {
        estimate,
        argmax,
        labels: cands.iter().map(Candidate::label).collect(),
        trace,
        doubling,
        chain_steps: k,
        chain_value: doubling.powi(k as i32),
    })
}
