use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Density, VectorField};
use crate::nfunc::ModularFunction;

/// `λ = 2^j` for `j = -6..=6`.
pub const DYADIC_LAMBDAS: [f64; 13] = [
    0.015625, 0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// Diagnostics recorded along a strictly monotone index (truncation levels,
/// mollification radii, thresholds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub index_name: String,
    pub index: Vec<f64>,
    pub series: Vec<Series>,
    /// Smallest `λ` (or threshold) that certified convergence, if any.
    pub witness: Option<f64>,
}

impl ConvergenceTrace {
    pub fn new(index_name: &str, index: Vec<f64>) -> Result<Self> {
        let inc = index.windows(2).all(|w| w[1] > w[0]);
        let dec = index.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::Input("trace index must be strictly monotone".into()));
        }
        Ok(ConvergenceTrace {
            index_name: index_name.into(),
            index,
            series: Vec::new(),
            witness: None,
        })
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.index.len());
        self.series.push(Series {
            name: name.into(),
            values,
        });
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    /// CSV with the index as first column and one column per series.
    pub fn to_csv(&self) -> String {
        let mut out = self.index_name.clone();
        for s in &self.series {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push('\n');
        for (i, x) in self.index.iter().enumerate() {
            out.push_str(&x.to_string());
            for s in &self.series {
                out.push(',');
                out.push_str(&s.values[i].to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Series name used for `λ` in modular convergence traces.
pub fn lambda_label(lam: f64) -> String {
    format!("lambda={lam}")
}

/// For each `λ`, the sequence `∫M(x, (ξ_i − ξ)/λ)`. The witness is the
/// smallest `λ` whose last entry is at most `tol`.
pub fn modular_convergence_test(
    m: &ModularFunction,
    sequence: &[VectorField],
    limit: &VectorField,
    lambdas: &[f64],
    tol: f64,
) -> Result<ConvergenceTrace> {
    let index: Vec<f64> = (1..=sequence.len()).map(|i| i as f64).collect();
    let mut trace = ConvergenceTrace::new("i", index)?;
    let diffs: Vec<VectorField> = sequence
        .iter()
        .map(|x| x.sub(limit))
        .collect::<Result<_>>()?;
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &lam in &sorted {
        let vals: Vec<f64> = diffs
            .iter()
            .map(|d| super::modular(m, &d.scale(1.0 / lam)))
            .collect::<Result<_>>()?;
        if trace.witness.is_none() && vals.last().is_some_and(|&v| v <= tol) {
            trace.witness = Some(lam);
        }
        trace.push(&lambda_label(lam), vals);
    }
    Ok(trace)
}

/// Log-spaced thresholds `2^-4 … 2^20`.
pub fn default_radii() -> Vec<f64> {
    (-4..=20).map(|j| 2f64.powi(j)).collect()
}

/// `R ↦ sup_n ∫_{|f_n| ≥ R} |f_n|` and `R ↦ sup_n ∫ (|f_n| − R)⁺`, the
/// latter being the `(ε, δ)` form with `R = 1/√δ`.
pub fn uniform_integrability_profile(
    sequence: &[Density],
    radii: &[f64],
) -> Result<ConvergenceTrace> {
    if sequence.is_empty() {
        return Err(Error::Input("empty sequence".into()));
    }
    let mut trace = ConvergenceTrace::new("R", radii.to_vec())?;
    let mut tail = Vec::with_capacity(radii.len());
    let mut excess = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut t: f64 = 0.0;
        let mut e: f64 = 0.0;
        for f in sequence {
            let mut ti = 0.0;
            let mut ei = 0.0;
            for (v, w) in f.values.iter().zip(&f.weights) {
                let a = v.abs();
                if a >= r {
                    ti += a * w;
                }
                ei += (a - r).max(0.0) * w;
            }
            t = t.max(ti);
            e = e.max(ei);
        }
        tail.push(t);
        excess.push(e);
    }
    trace.push("tail_mass", tail);
    trace.push("excess", excess);
    Ok(trace)
}
