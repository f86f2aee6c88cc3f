use std::f64::consts::PI;

use orlicz::fields::{GridDomain, ScalarField};
use orlicz::nfunc::RadialProfile;
use orlicz::poincare::{
    chain_steps, poincare_constant_estimate, poincare_ratio, poincare_ratio_with,
};
use orlicz::Error;

fn square() -> RadialProfile {
    RadialProfile::from_fn(|t| t * t).unwrap()
}

fn linear() -> RadialProfile {
    RadialProfile::from_fn(|t| t).unwrap()
}

/// Smallest eigenvalue of the 5-point Dirichlet Laplacian on an `n × n` grid of the unit square.
fn discrete_eigenvalue(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    8.0 / (h * h) * (PI * h / 2.0).sin().powi(2)
}

#[test]
fn eigenmode_ratio_is_inverse_eigenvalue() {
    let d = GridDomain::unit_square(64);
    let g = ScalarField::dirichlet_from_fn(d, |p| (PI * p[0]).sin() * (PI * p[1]).sin());
    let r = poincare_ratio_with(|t| t * t, &g).unwrap();
    assert!((r - 1.0 / discrete_eigenvalue(64)).abs() < 1e-12, "{r}");
    assert!((r - 1.0 / (2.0 * PI * PI)).abs() < 1e-3);
}

#[test]
fn pyramid_with_linear_m() {
    // min(x, 1 − x, y, 1 − y): volume 1/6 under a unit-slope surface, so the ratio is 1/6
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = ScalarField::dirichlet_from_fn(GridDomain::unit_square(n), |p| {
                p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1])
            });
            (poincare_ratio(&linear(), &g).unwrap() - 1.0 / 6.0).abs()
        })
        .collect();
    assert!(
        errs[2] < 1e-2 && errs[2] < errs[1] && errs[1] < errs[0],
        "{errs:?}"
    );
}

#[test]
fn square_ratio_is_scale_invariant() {
    let d = GridDomain::unit_square(32);
    let g = ScalarField::dirichlet_from_fn(d, |p| {
        p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]) * (1.0 + p[0])
    });
    let a = poincare_ratio_with(|t| t * t, &g).unwrap();
    let b = poincare_ratio_with(|t| t * t, &g.map(|v| 2.0 * v)).unwrap();
    assert!((a - b).abs() < 1e-12 * a);
}

#[test]
fn zero_field_is_degenerate() {
    let d = GridDomain::unit_square(8);
    assert!(matches!(
        poincare_ratio(&square(), &ScalarField::zeros(d)),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn estimate_for_square_lies_between_eigen_bound_and_chain() {
    let d = GridDomain::unit_square(64);
    let est = poincare_constant_estimate(&square(), &d, 24, 3).unwrap();
    assert_eq!(chain_steps(&d), 3);
    assert!(est.estimate >= 1.0 / (2.0 * PI * PI) - 1e-3);
    assert!(est.estimate <= est.chain_value);
    assert!((est.chain_value - 64.0).abs() < 0.1, "{}", est.chain_value);
    for r in est.trace.get("ratio").unwrap() {
        assert!(*r <= est.estimate);
    }
}

#[test]
fn linear_estimate_scales_with_domain() {
    let small = GridDomain::unit_square(64);
    let big = small.scaled(2.0).unwrap();
    let a = poincare_constant_estimate(&linear(), &small, 16, 5)
        .unwrap()
        .estimate;
    let b = poincare_constant_estimate(&linear(), &big, 16, 5)
        .unwrap()
        .estimate;
    assert!((b / a - 2.0).abs() < 1e-2, "{a} {b}");
}

#[test]
fn empty_battery_is_an_error() {
    assert!(matches!(
        poincare_constant_estimate(&square(), &GridDomain::unit_square(8), 0, 0),
        Err(Error::Input(_))
    ));
}
