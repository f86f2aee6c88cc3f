//! End-to-end run of a problem definition and its on-disk report.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use crate::error::Result;
use crate::fields::{gradient, modular, ScalarField};
use crate::nfunc::{ConditionReport, XiSamples};
use crate::solver::operator::coercivity_check;
use crate::solver::pipeline::{
    apriori_check, convergence_diagnostics, radiation_profile, renormalized_battery,
    renormalized_residual, smooth_battery, truncated_sequence, AprioriTable,
    ConvergenceDiagnostics, RadiationProfile, Table, TruncatedRun,
};
use crate::solver::problem::{EllipticProblem, ProblemConfig};

/// Everything computed for one problem definition.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub config: ProblemConfig,
    pub run: TruncatedRun,
    pub coercivity: ConditionReport,
    pub c_a: f64,
    pub apriori: AprioriTable,
    pub radiation: RadiationProfile,
    /// Present when the schedule has at least three levels.
    pub convergence: Option<ConvergenceDiagnostics>,
    /// Columns `pair, center, half_width, plateau, residual`.
    pub residuals: Table,
    /// Columns `s, flux_pairing, coercive_bound`: `Σ A(∇u)·∇u` against
    /// `c_A ∫M(x, ∇u)` per snapshot.
    pub coercive: Table,
}

/// Sum `Σ A(x, ∇u)·∇u |T|` over all triangles.
pub fn flux_pairing(problem: &EllipticProblem, u: &ScalarField) -> Result<f64> {
    let g = gradient(u);
    problem.operator.apply(&g).dot_integral(&g)
}

pub fn run_pipeline(config: &ProblemConfig) -> Result<SolverReport> {
    let problem = config.build()?;
    let tol = &config.tolerances;
    let diag = &config.diagnostics;
    let run = truncated_sequence(&problem, &config.schedule, tol.solve, tol.max_iter)?;
    let dirs = if problem.modular.is_isotropic() {
        1
    } else {
        16
    };
    let (coercivity, c_a) = coercivity_check(
        &problem.operator,
        &problem.modular,
        &XiSamples::standard(dirs),
    )?;
    let apriori = apriori_check(
        &problem,
        &run,
        &diag.k_values,
        c_a.max(f64::MIN_POSITIVE),
        tol.apriori,
    )?;
    let levels: Vec<f64> = (0..diag.levels).map(|l| l as f64).collect();
    let u = run.last();
    let radiation = radiation_profile(u, &problem.operator, &levels)?;
    let convergence = if run.snapshots.len() >= 3 {
        let phis = smooth_battery(8, diag.seed);
        Some(convergence_diagnostics(
            &problem,
            &run,
            &diag.k_values,
            diag.lp,
            diag.alpha,
            &phis,
        )?)
    } else {
        None
    };
    let range = u.max_abs().ceil().max(1.0);
    let battery = renormalized_battery(diag.battery, range, diag.seed);
    let d = *problem.domain();
    let rows = battery
        .par_iter()
        .enumerate()
        .map(|(j, (h, phi))| {
            let r =
                renormalized_residual(u, &problem.operator, &problem.source, h, &phi.sample(&d))?;
            Ok(vec![j as f64, h.center, h.half_width, h.plateau, r])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut residuals = Table::new(&["pair", "center", "half_width", "plateau", "residual"]);
    rows.into_iter().for_each(|r| residuals.push(r));
    let mut coercive = Table::new(&["s", "flux_pairing", "coercive_bound"]);
    for (s, snap) in run.schedule.iter().zip(&run.snapshots) {
        let lhs = flux_pairing(&problem, snap)?;
        coercive.push(vec![
            *s,
            lhs,
            c_a * modular(&problem.modular, &gradient(snap))?,
        ]);
    }
    Ok(SolverReport {
        config: config.clone(),
        run,
        coercivity,
        c_a,
        apriori,
        radiation,
        convergence,
        residuals,
        coercive,
    })
}

const SCHEMA: &str = r#"{
  "apriori.csv": {
    "s": "truncation level of the source",
    "k": "truncation level of the solution",
    "modular": "integral of M(x, grad T_k(u_s))",
    "conjugate_modular": "integral of M*(x, A(x, grad T_k(u_s)))",
    "bound": "(k / c_A) times the L1 norm of f",
    "ratio": "modular / (k ||f||_1)",
    "conjugate_ratio": "conjugate_modular / (k ||f||_1)"
  },
  "radiation.csv": {
    "l": "level",
    "flux": "integral of A(x, grad u) . grad u over {l < |u| < l + 1}, last snapshot",
    "measure": "area of {|u| > l}"
  },
  "distances.csv": {
    "k": "truncation level",
    "s": "later truncation level of the pair",
    "distance": "L^p distance between T_k(u_s) and T_k(u_s') for consecutive s' < s"
  },
  "levelsets.csv": {
    "l": "level",
    "measure": "area of {|u| > l}, last snapshot",
    "ratio": "l / m_underbar(l)",
    "envelope": "least nondecreasing function of ratio dominating measure"
  },
  "pairings.csv": {
    "k": "truncation level",
    "s": "truncation level of the source",
    "phi<j>": "integral of A(x, grad T_k(u_s)) . grad phi_j for smooth test field j"
  },
  "residuals.csv": {
    "pair": "index of the (h, phi) pair",
    "center": "center of the cutoff h",
    "half_width": "support radius of h",
    "plateau": "radius on which h = 1",
    "residual": "renormalized residual of the last snapshot"
  },
  "coercive.csv": {
    "s": "truncation level of the source",
    "flux_pairing": "integral of A(x, grad u_s) . grad u_s",
    "coercive_bound": "c_A times the integral of M(x, grad u_s)"
  },
  "descent.csv": {
    "s": "truncation level of the source",
    "iteration": "accepted iterate, counted from 0 per regularization level",
    "eps": "regularization level",
    "energy": "discrete energy",
    "residual": "max-norm of the weak-form residual"
  },
  "snapshots/u_<j>.bin": "little-endian f64 grid values of u_s, row-major with shape [ny + 1, nx + 1]; sidecar u_<j>.json"
}
"#;

impl SolverReport {
    /// Coercivity fit, a priori bounds, radiation nonnegativity and the
    /// summed coercivity comparison all hold.
    pub fn passed(&self) -> bool {
        self.coercivity.pass
            && self.apriori.pass
            && self.radiation.is_nonnegative()
            && self
                .coercive
                .rows
                .iter()
                .all(|r| r[1] >= r[2] * (1.0 - 1e-9) - 1e-300)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("snapshots"))?;
        fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&self.config)?,
        )?;
        let d = self.config.domain;
        for (j, (s, u)) in self
            .run
            .schedule
            .iter()
            .zip(&self.run.snapshots)
            .enumerate()
        {
            let bytes: Vec<u8> = u.values().iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(dir.join(format!("snapshots/u_{j}.bin")), bytes)?;
            let side = json!({
                "s": s,
                "shape": [d.ny() + 1, d.nx() + 1],
                "dtype": "<f8",
                "order": "row-major",
                "extent": d.extent(),
            });
            fs::write(
                dir.join(format!("snapshots/u_{j}.json")),
                serde_json::to_string_pretty(&side)?,
            )?;
        }
        fs::write(dir.join("apriori.csv"), self.apriori.table.to_csv())?;
        fs::write(
            dir.join("radiation.csv"),
            self.radiation.to_trace().to_csv(),
        )?;
        fs::write(dir.join("residuals.csv"), self.residuals.to_csv())?;
        fs::write(dir.join("coercive.csv"), self.coercive.to_csv())?;
        fs::write(dir.join("coercivity.json"), self.coercivity.to_json())?;
        let mut descent = Table::new(&["s", "iteration", "eps", "energy", "residual"]);
        for (s, t) in self.run.schedule.iter().zip(&self.run.traces) {
            let mut it = 0;
            for i in 0..t.energy.len() {
                if i > 0 && t.eps[i] != t.eps[i - 1] {
                    it = 0;
                }
                descent.push(vec![*s, it as f64, t.eps[i], t.energy[i], t.residual[i]]);
                it += 1;
            }
        }
        fs::write(dir.join("descent.csv"), descent.to_csv())?;
        let mut decay = serde_json::Map::new();
        if let Some(c) = &self.convergence {
            let mut dist = Table::new(&["k", "s", "distance"]);
            for (k, t) in &c.distances {
                for (s, v) in t.index.iter().zip(t.get("distance").unwrap_or(&[])) {
                    dist.push(vec![*k, *s, *v]);
                }
                decay.insert(
                    k.to_string(),
                    json!(finite_or_null(c.min_decay_factor(*k).unwrap_or(f64::NAN))),
                );
            }
            fs::write(dir.join("distances.csv"), dist.to_csv())?;
            fs::write(dir.join("levelsets.csv"), c.level_sets.to_csv())?;
            let mut cols = vec!["k".to_string(), "s".to_string()];
            if let Some((_, t)) = c.pairings.first() {
                cols.extend(t.series.iter().map(|s| s.name.clone()));
            }
            let mut pair = Table {
                columns: cols,
                rows: Vec::new(),
            };
            for (k, t) in &c.pairings {
                for (i, s) in t.index.iter().enumerate() {
                    let mut row = vec![*k, *s];
                    row.extend(t.series.iter().map(|ser| ser.values[i]));
                    pair.push(row);
                }
            }
            fs::write(dir.join("pairings.csv"), pair.to_csv())?;
        }
        let summary = json!({
            "pass": self.passed(),
            "c_a": finite_or_null(self.c_a),
            "coercivity_pass": self.coercivity.pass,
            "apriori_pass": self.apriori.pass,
            "apriori_max_ratio": finite_or_null(self.apriori.table.column("ratio").unwrap_or_default().into_iter().fold(0.0, f64::max)),
            "radiation_nonnegative": self.radiation.is_nonnegative(),
            "radiation_tail_ratio": finite_or_null(self.radiation.tail_ratio()),
            "max_renormalized_residual": finite_or_null(self.residuals.column("residual").unwrap_or_default().into_iter().fold(0.0, f64::max)),
            "distance_decay_factor": decay,
            "cauchy_gaps": self.convergence.as_ref().map(|c| c.cauchy_gaps.iter().map(|(k, g)| json!({"k": k, "gap": g})).collect::<Vec<_>>()),
            "iterations": self.run.traces.iter().map(|t| t.energy.len().saturating_sub(1)).collect::<Vec<_>>(),
        });
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
        fs::write(dir.join("schema.json"), SCHEMA)?;
        Ok(())
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}
