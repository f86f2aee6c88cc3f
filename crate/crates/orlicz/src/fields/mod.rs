//! Grid, fields, modulars, Luxemburg norms, truncations and convergence tests.

mod convergence;
mod domain;
mod field;
mod modular;
mod truncation;

pub use convergence::{
    default_radii, lambda_label, modular_convergence_test, uniform_integrability_profile,
    ConvergenceTrace, Series, DYADIC_LAMBDAS,
};
pub use domain::GridDomain;
pub use field::{gradient, weak_divergence, Density, ScalarField, VectorField};
pub use modular::{
    conjugate_modular, holder_gap, luxemburg, luxemburg_norm, modular, modular_density, BRACKET_CAP,
};
pub use truncation::{masked_gradient, psi_l, truncate, truncate_value};
