//! Truncation scheme and the diagnostics run on its snapshots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    conjugate_modular, gradient, masked_gradient, modular, truncate, ConvergenceTrace, ScalarField,
    VectorField,
};
use crate::nfunc::{m_underbar, UNDERBAR_SUBSTEPS};
use crate::poincare::{candidate_battery, Candidate};
use crate::solver::descent::{solve_bounded_from, DescentTrace};
use crate::solver::operator::Operator;
use crate::solver::problem::EllipticProblem;

/// Rectangular numeric table with named columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(
                &r.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

/// Solutions `u_s` of the problems with source `T_s(f)`.
#[derive(Clone, Debug)]
pub struct TruncatedRun {
    pub schedule: Vec<f64>,
    pub snapshots: Vec<ScalarField>,
    pub traces: Vec<DescentTrace>,
}

impl TruncatedRun {
    /// The last snapshot, standing in for the limit solution.
    pub fn last(&self) -> &ScalarField {
        self.snapshots.last().expect("non-empty run")
    }
}

/// Solves for each `s` of the schedule in turn, warm-starting from the previous `u_s`.
pub fn truncated_sequence(
    problem: &EllipticProblem,
    schedule: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<TruncatedRun> {
    if schedule.is_empty() {
        return Err(Error::Input("empty truncation schedule".into()));
    }
    if schedule.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Input("truncation levels must be positive".into()));
    }
    let mut snapshots: Vec<ScalarField> = Vec::with_capacity(schedule.len());
    let mut traces = Vec::with_capacity(schedule.len());
    for &s in schedule {
        let g = truncate(&problem.source, s)?;
        let sol = solve_bounded_from(problem, &g, tol, max_iter, snapshots.last()).map_err(
            |e| match e {
                Error::NonConvergence {
                    iterations,
                    last,
                    residuals,
                    ..
                } => Error::NonConvergence {
                    level: Some(s),
                    iterations,
                    last,
                    residuals,
                },
                other => other,
            },
        )?;
        snapshots.push(sol.u);
        traces.push(sol.trace);
    }
    Ok(TruncatedRun {
        schedule: schedule.to_vec(),
        snapshots,
        traces,
    })
}

/// Modulars of `∇T_k(u_s)` and `A(x, ∇T_k(u_s))` against `(k/c_A)‖f‖_{L¹}`.
#[derive(Clone, Debug)]
pub struct AprioriTable {
    /// Columns `s, k, modular, conjugate_modular, bound, ratio, conjugate_ratio`,
    /// where the ratios are taken against `k‖f‖_{L¹}`.
    pub table: Table,
    pub c_a: f64,
    pub pass: bool,
    /// First violating `(s, k)`.
    pub witness: Option<(f64, f64)>,
}

pub fn apriori_check(
    problem: &EllipticProblem,
    run: &TruncatedRun,
    k_values: &[f64],
    c_a: f64,
    tol: f64,
) -> Result<AprioriTable> {
    if !(c_a > 0.0) {
        return Err(Error::Parameter(format!("c_A = {c_a} must be positive")));
    }
    if k_values.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::Parameter(
            "truncation levels k must be positive".into(),
        ));
    }
    let f1 = problem.source_l1();
    let cells: Vec<(usize, f64)> = (0..run.snapshots.len())
        .flat_map(|i| k_values.iter().map(move |&k| (i, k)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, k)| {
            let g = masked_gradient(&run.snapshots[i], k);
            let mm = modular(&problem.modular, &g)?;
            let mc = conjugate_modular(&problem.modular, &problem.operator.apply(&g))?;
            let base = k * f1;
            let ratio = |v: f64| if base > 0.0 { v / base } else { 0.0 };
            Ok(vec![
                run.schedule[i],
                k,
                mm,
                mc,
                base / c_a,
                ratio(mm),
                ratio(mc),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "s",
        "k",
        "modular",
        "conjugate_modular",
        "bound",
        "ratio",
        "conjugate_ratio",
    ]);
    let mut witness = None;
    for r in rows {
        let limit = r[4] * (1.0 + tol);
        if witness.is_none() && (r[2] > limit || r[3] > limit) {
            witness = Some((r[0], r[1]));
        }
        table.push(r);
    }
    Ok(AprioriTable {
        table,
        c_a,
        pass: witness.is_none(),
        witness,
    })
}

/// `l ↦ ∫_{l<|u|<l+1} A(x, ∇u)·∇u` and `l ↦ |{|u| > l}|`.
#[derive(Clone, Debug)]
pub struct RadiationProfile {
    pub levels: Vec<f64>,
    pub flux: Vec<f64>,
    pub measure: Vec<f64>,
}

impl RadiationProfile {
    pub fn is_nonnegative(&self) -> bool {
        self.flux.iter().all(|v| *v >= 0.0)
    }

    /// Last flux value over the value at `l = 1` (0 when both vanish).
    pub fn tail_ratio(&self) -> f64 {
        let at_one = self
            .levels
            .iter()
            .position(|&l| l == 1.0)
            .map(|i| self.flux[i])
            .unwrap_or(f64::NAN);
        let last = *self.flux.last().unwrap_or(&0.0);
        if last == 0.0 {
            0.0
        } else {
            last / at_one
        }
    }

    /// Flux nonincreasing from `l = 1` on.
    pub fn is_decreasing_from_one(&self) -> bool {
        let start = self
            .levels
            .iter()
            .position(|&l| l >= 1.0)
            .unwrap_or(self.levels.len());
        self.flux[start..].windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_trace(&self) -> ConvergenceTrace {
        let mut t = ConvergenceTrace::new("l", self.levels.clone()).expect("increasing levels");
        t.push("flux", self.flux.clone());
        t.push("measure", self.measure.clone());
        t
    }
}

/// Triangles are assigned to a band by the mean of their vertex values.
pub fn radiation_profile(
    u: &ScalarField,
    op: &Operator,
    levels: &[f64],
) -> Result<RadiationProfile> {
    if u.domain() != op.domain() {
        return Err(Error::DomainMismatch);
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::Input(
            "levels must be nonnegative and increasing".into(),
        ));
    }
    let d = *u.domain();
    let grad = gradient(u);
    let nc = d.num_cells();
    let w = grad.entry_weight();
    let v = u.values();
    let density: Vec<(f64, f64)> = grad
        .values()
        .iter()
        .enumerate()
        .map(|(k, &xi)| {
            let nodes = d.triangle_nodes(k % nc, k / nc);
            let centroid = nodes.iter().map(|&n| v[n]).sum::<f64>() / 3.0;
            let a = op.flux(k % nc, xi, 0.0);
            (centroid.abs(), (a[0] * xi[0] + a[1] * xi[1]) * w)
        })
        .collect();
    let flux = levels
        .iter()
        .map(|&l| {
            density
                .iter()
                .filter(|(c, _)| *c > l && *c < l + 1.0)
                .fold(0.0, |a, (_, e)| a + e)
        })
        .collect();
    let measure = levels
        .iter()
        .map(|&l| {
            (0..d.num_nodes())
                .filter(|&n| v[n].abs() > l)
                .fold(0.0, |a, n| a + d.node_weight(n))
        })
        .collect();
    Ok(RadiationProfile {
        levels: levels.to_vec(),
        flux,
        measure,
    })
}

/// Compactly supported `C¹` cutoff: 1 on `|t − center| ≤ plateau`, then
/// `(1 − z²)^order` with `z = (|t − center| − plateau)/(half_width − plateau)`,
/// and 0 beyond `half_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub center: f64,
    pub half_width: f64,
    #[serde(default)]
    pub plateau: f64,
    #[serde(default = "two")]
    pub order: u32,
}

fn two() -> u32 {
    2
}

impl Cutoff {
    pub fn new(center: f64, half_width: f64, plateau: f64, order: u32) -> Result<Self> {
        if !(half_width > plateau && plateau >= 0.0) || order < 2 {
            return Err(Error::Parameter(
                "cutoff needs 0 ≤ plateau < half_width and order ≥ 2".into(),
            ));
        }
        Ok(Cutoff {
            center,
            half_width,
            plateau,
            order,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let r = (t - self.center).abs();
        if r <= self.plateau {
            1.0
        } else if r >= self.half_width {
            0.0
        } else {
            let z = (r - self.plateau) / (self.half_width - self.plateau);
            (1.0 - z * z).powi(self.order as i32)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let r = (t - self.center).abs();
        if r <= self.plateau || r >= self.half_width {
            return 0.0;
        }
        let ramp = self.half_width - self.plateau;
        let z = (r - self.plateau) / ramp;
        let n = self.order as i32;
        -2.0 * n as f64 * z * (1.0 - z * z).powi(n - 1) / ramp * (t - self.center).signum()
    }
}

/// `|Σ A(x, ∇u)·∇(h(u)φ)|T| − Σ f h(u) φ w|` with
/// `∇(h(u)φ) = h′(u)φ ∇u + h(u) ∇φ` and `u, φ` at triangle centroids.
pub fn renormalized_residual(
    u: &ScalarField,
    op: &Operator,
    f: &ScalarField,
    cutoff: &Cutoff,
    phi: &ScalarField,
) -> Result<f64> {
    let d = *u.domain();
    if op.domain() != &d || f.domain() != &d || phi.domain() != &d {
        return Err(Error::DomainMismatch);
    }
    if !phi.is_dirichlet() {
        return Err(Error::Input("φ must vanish on the boundary".into()));
    }
    let gu = gradient(u);
    let gp = gradient(phi);
    let nc = d.num_cells();
    let (uv, pv) = (u.values(), phi.values());
    let mut lhs = 0.0;
    for (k, (xi, dphi)) in gu.values().iter().zip(gp.values()).enumerate() {
        let nodes = d.triangle_nodes(k % nc, k / nc);
        let uc = nodes.iter().map(|&n| uv[n]).sum::<f64>() / 3.0;
        let pc = nodes.iter().map(|&n| pv[n]).sum::<f64>() / 3.0;
        let (hv, hd) = (cutoff.value(uc), cutoff.derivative(uc));
        if hv == 0.0 && hd == 0.0 {
            continue;
        }
        let a = op.flux(k % nc, *xi, 0.0);
        let grad = [
            hd * pc * xi[0] + hv * dphi[0],
            hd * pc * xi[1] + hv * dphi[1],
        ];
        lhs += a[0] * grad[0] + a[1] * grad[1];
    }
    lhs *= gu.entry_weight();
    let rhs: f64 = (0..d.num_nodes())
        .map(|n| f.values()[n] * cutoff.value(uv[n]) * pv[n] * d.node_weight(n))
        .sum();
    Ok((lhs - rhs).abs())
}

/// Smooth test fields: low sine modes, then seeded random sine series.
pub fn smooth_battery(size: usize, seed: u64) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = [(1, 1), (2, 1), (1, 2), (2, 2)]
        .iter()
        .map(|&(k, l)| Candidate::Mode { k, l })
        .take(size)
        .collect();
    let randoms = candidate_battery(11 + size.saturating_sub(out.len()), seed);
    out.extend(randoms.into_iter().skip(11));
    out
}

/// `(h, φ)` pairs with cutoff centers in `[0, range]`.
pub fn renormalized_battery(size: usize, range: f64, seed: u64) -> Vec<(Cutoff, Candidate)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let phis = smooth_battery(size, seed);
    phis.into_iter()
        .map(|phi| {
            let center = rng.gen_range(0.0..range.max(1e-12));
            let half_width = rng.gen_range(0.25..1.0) * range.max(1e-12);
            let plateau = rng.gen_range(0.0..0.5) * half_width;
            (
                Cutoff {
                    center,
                    half_width,
                    plateau,
                    order: 2,
                },
                phi,
            )
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConvergenceDiagnostics {
    /// Per `k`: index `s` (the later snapshot of each pair), series `distance`.
    pub distances: Vec<(f64, ConvergenceTrace)>,
    /// Index `l`; series `measure`, `ratio` (`l/m̲(l)`) and `envelope`, the
    /// least nondecreasing function of `ratio` dominating `measure`.
    pub level_sets: ConvergenceTrace,
    /// Level-set measure nonincreasing in `l` while `l/m̲(l)` is nonincreasing.
    pub level_shape_ok: bool,
    /// Per `k`: index `s`, one series per test field.
    pub pairings: Vec<(f64, ConvergenceTrace)>,
    /// Largest `|pairing(s_last) − pairing(s_prev)|` per `k`.
    pub cauchy_gaps: Vec<(f64, f64)>,
}

impl ConvergenceDiagnostics {
    /// Smallest ratio `d_i/d_{i+1}` over consecutive distances for level `k`
    /// (pairs where both vanish are skipped, `0` after a nonzero distance counts as ∞).
    pub fn min_decay_factor(&self, k: f64) -> Option<f64> {
        let t = &self.distances.iter().find(|(kk, _)| *kk == k)?.1;
        let d = t.get("distance")?;
        let mut worst = f64::INFINITY;
        for w in d.windows(2) {
            if w[1] == 0.0 {
                continue;
            }
            worst = worst.min(w[0] / w[1]);
        }
        Some(worst)
    }
}

pub fn convergence_diagnostics(
    problem: &EllipticProblem,
    run: &TruncatedRun,
    k_values: &[f64],
    lp: f64,
    alpha: f64,
    phis: &[Candidate],
) -> Result<ConvergenceDiagnostics> {
    if run.snapshots.len() < 3 {
        return Err(Error::Input("need at least three snapshots".into()));
    }
    if !(lp >= 1.0) {
        return Err(Error::Parameter(format!(
            "L^p exponent {lp} must be at least 1"
        )));
    }
    let d = *problem.domain();
    let later = run.schedule[1..].to_vec();
    let distances = k_values
        .par_iter()
        .map(|&k| {
            let trunc: Vec<ScalarField> = run
                .snapshots
                .iter()
                .map(|u| truncate(u, k))
                .collect::<Result<_>>()?;
            let dist = trunc
                .windows(2)
                .map(|w| w[1].lp_distance(&w[0], lp))
                .collect::<Result<Vec<_>>>()?;
            let mut t = ConvergenceTrace::new("s", later.clone())?;
            t.push("distance", dist);
            Ok((k, t))
        })
        .collect::<Result<Vec<_>>>()?;

    let u = run.last();
    let top = u.max_abs().ceil().max(1.0) as usize;
    let levels: Vec<f64> = (1..=top).map(|l| l as f64).collect();
    let mu = m_underbar(&problem.modular, alpha, UNDERBAR_SUBSTEPS)?;
    let measure: Vec<f64> = levels
        .iter()
        .map(|&l| {
            (0..d.num_nodes())
                .filter(|&n| u.values()[n].abs() > l)
                .fold(0.0, |a, n| a + d.node_weight(n))
        })
        .collect();
    let ratio: Vec<f64> = levels.iter().map(|&l| l / mu.eval(l)).collect();
    let envelope: Vec<f64> = ratio
        .iter()
        .map(|&r| {
            ratio
                .iter()
                .zip(&measure)
                .filter(|(q, _)| **q <= r)
                .map(|(_, m)| *m)
                .fold(0.0, f64::max)
        })
        .collect();
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let level_shape_ok = mono(&measure) && mono(&ratio);
    let mut level_sets = ConvergenceTrace::new("l", levels)?;
    level_sets.push("measure", measure);
    level_sets.push("ratio", ratio);
    level_sets.push("envelope", envelope);

    let fields: Vec<ScalarField> = phis.iter().map(|c| c.sample(&d)).collect();
    let grads: Vec<VectorField> = fields.iter().map(gradient).collect();
    let pairings = k_values
        .par_iter()
        .map(|&k| {
            let mut t = ConvergenceTrace::new("s", run.schedule.clone())?;
            let fluxes: Vec<VectorField> = run
                .snapshots
                .iter()
                .map(|s| problem.operator.apply(&masked_gradient(s, k)))
                .collect();
            for (j, g) in grads.iter().enumerate() {
                let vals = fluxes
                    .iter()
                    .map(|a| a.dot_integral(g))
                    .collect::<Result<Vec<_>>>()?;
                t.push(&format!("phi{j}"), vals);
            }
            Ok((k, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let cauchy_gaps = pairings
        .iter()
        .map(|(k, t)| {
            let gap = t
                .series
                .iter()
                .map(|s| {
                    let n = s.values.len();
                    (s.values[n - 1] - s.values[n - 2]).abs()
                })
                .fold(0.0, f64::max);
            (*k, gap)
        })
        .collect();
    Ok(ConvergenceDiagnostics {
        distances,
        level_sets,
        level_shape_ok,
        pairings,
        cauchy_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv_and_columns() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 0.5]);
        t.push(vec![2.0, -3.0]);
        assert_eq!(t.to_csv(), "a,b\n1,0.5\n2,-3\n");
        assert_eq!(t.column("b"), Some(vec![0.5, -3.0]));
        assert_eq!(t.column("c"), None);
    }

    #[test]
    fn smooth_battery_starts_with_modes() {
        let b = smooth_battery(6, 1);
        assert_eq!(b.len(), 6);
        assert_eq!(b[0], Candidate::Mode { k: 1, l: 1 });
        assert!(matches!(b[5], Candidate::SineSeries { .. }));
        assert_eq!(smooth_battery(6, 1), b);
    }
}
