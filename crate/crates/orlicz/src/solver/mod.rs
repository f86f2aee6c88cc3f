//! Monotone operators, the bounded-data solver and the truncation pipeline.

mod descent;
mod operator;
mod pipeline;
mod problem;
mod report;

pub use descent::{
    solve_bounded, solve_bounded_from, BoundedSolution, DescentTrace, Energy,
    PoissonPreconditioner, CONTINUATION_SLACK, LINE_SEARCH_FAILURES,
};
pub use operator::{
    coercivity_check, conjugate_flux_bound, flux_growth_check, growth_profile, monotonicity_check,
    profile_inverse, Operator, OperatorFamily, OperatorSpec, EPS_LEVELS,
};
pub use pipeline::{
    apriori_check, convergence_diagnostics, radiation_profile, renormalized_battery,
    renormalized_residual, smooth_battery, truncated_sequence, AprioriTable,
    ConvergenceDiagnostics, Cutoff, RadiationProfile, Table, TruncatedRun,
};
pub use problem::{
    default_schedule, manufactured_solution, DiagnosticsSpec, EllipticProblem, ProblemConfig,
    SourceSpec, Tolerances, SINGULAR_SUBSAMPLES,
};
pub use report::{flux_pairing, run_pipeline, SolverReport};
