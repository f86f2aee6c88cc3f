use std::fs;
use std::path::Path;

use orlicz::nfunc::{
    check_condition_m, check_delta2, check_log_holder, check_nfunction, ConditionReport,
    ModularFunction, XiSamples,
};
use serde::Deserialize;

use crate::{io_failure, read_config, verdict, Failure};

#[derive(Clone, Copy, Debug, Deserialize)]
enum Condition {
    #[serde(rename = "nfunction")]
    NFunction,
    #[serde(rename = "delta2")]
    Delta2,
    #[serde(rename = "log-holder")]
    LogHolder,
    #[serde(rename = "condition-M")]
    ConditionM,
}

impl Condition {
    fn file_name(self) -> &'static str {
        match self {
            Condition::NFunction => "nfunction.json",
            Condition::Delta2 => "delta2.json",
            Condition::LogHolder => "log_holder.json",
            Condition::ConditionM => "condition_m.json",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckConfig {
    modular: ModularFunction,
    conditions: Vec<Condition>,
    /// Directions per radius for anisotropic families.
    #[serde(default = "default_directions")]
    directions: usize,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    /// Cube sizes of the condition-M check.
    #[serde(default = "default_deltas")]
    deltas: Vec<f64>,
    /// Point pairs sampled by the log-Hölder check.
    #[serde(default = "default_budget")]
    budget: usize,
    #[serde(default)]
    seed: u64,
}

fn default_directions() -> usize {
    8
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_deltas() -> Vec<f64> {
    (3..=6).map(|k| 2f64.powi(-k)).collect()
}
fn default_budget() -> usize {
    20_000
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let text = read_config(config)?;
    let mut cfg: CheckConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad config: {e}")))?;
    if cfg.conditions.is_empty() {
        return Err(Failure::Usage("bad config: no conditions requested".into()));
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let m = &cfg.modular;
    let dirs = if m.is_isotropic() { 1 } else { cfg.directions };
    fs::create_dir_all(out).map_err(io_failure)?;
    let mut all = true;
    for &c in &cfg.conditions {
        let report: orlicz::Result<ConditionReport> = match c {
            Condition::NFunction => check_nfunction(m, &XiSamples::standard(dirs), cfg.tolerance),
            Condition::Delta2 => check_delta2(m, &XiSamples::top_decades(3, dirs)),
            Condition::LogHolder => check_log_holder(m, cfg.budget, cfg.seed),
            Condition::ConditionM => check_condition_m(m, &cfg.deltas, &XiSamples::standard(dirs)),
        };
        let report = report.map_err(|e| Failure::Check(format!("{c:?}: {e}")))?;
        fs::write(out.join(c.file_name()), report.to_json()).map_err(io_failure)?;
        println!("{}: {}", report.condition, verdict(report.pass));
        all &= report.pass;
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Check("some checks failed".into()))
    }
}
