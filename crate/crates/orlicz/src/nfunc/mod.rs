//! N-functions: evaluation, discrete conjugation and structural checks.

mod checks;
mod family;
mod profile;
mod underbar;

pub use checks::{
    check_condition_m, check_delta2, check_log_holder, check_nfunction, directions,
    ConditionReport, CubeCover, Witness, XiSamples, DRIFT_TOL,
};
pub use family::{Family, FieldSpec, ModularFunction};
pub use profile::{
    biconjugate, conjugate, conjugate_brute, default_nodes, log_nodes, lower_hull, RadialProfile,
    GRID_HI, GRID_LO, GRID_NODES,
};
pub use underbar::{lower_envelope, m_underbar, UNDERBAR_RATIO_STEPS, UNDERBAR_SUBSTEPS};

use crate::error::Result;

/// `M(x, ξ) + M*(x, η) − |ξ·η|`, nonnegative by the Fenchel–Young inequality.
pub fn fenchel_young_gap(
    m: &ModularFunction,
    cell: usize,
    xi: [f64; 2],
    eta: [f64; 2],
) -> Result<f64> {
    let value = m.eval(cell, xi)?;
    let conj = m.conj_value(cell, eta)?;
    Ok(value + conj - (xi[0] * eta[0] + xi[1] * eta[1]).abs())
}
