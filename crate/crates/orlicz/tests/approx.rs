use std::f64::consts::PI;

use orlicz::approx::{
    approximation_study, mollify_star, mollify_star_scalar, standard_mollifier,
    uniform_modular_bound_study,
};
use orlicz::fields::{GridDomain, ScalarField, VectorField, DYADIC_LAMBDAS};
use orlicz::nfunc::{FieldSpec, ModularFunction};
use orlicz::Error;

fn grid(n: usize) -> GridDomain {
    GridDomain::new(-0.5, 0.5, -0.5, 0.5, n, n).unwrap()
}

#[test]
fn kernel_is_even_normalized_and_compact() {
    let d = grid(64);
    let k = standard_mollifier(0.1, &d).unwrap();
    assert!((k.mass() - 1.0).abs() < 1e-12);
    let r = k.radius() as i64;
    for a in -r..=r {
        for b in -r..=r {
            assert_eq!(k.weight(a, b), k.weight(-a, -b));
            assert!(k.weight(a, b) >= 0.0);
            let dist = ((a * a + b * b) as f64).sqrt() * d.h();
            if dist >= 0.1 {
                assert_eq!(k.weight(a, b), 0.0);
            }
        }
    }
    assert!(matches!(
        standard_mollifier(d.h(), &d),
        Err(Error::Resolution(_))
    ));
}

#[test]
fn zero_stays_zero() {
    let d = grid(32);
    let out = mollify_star(&VectorField::zeros(d, 2), 0.05, 0.5).unwrap();
    assert!(out.values().iter().all(|v| *v == [0.0, 0.0]));
}

#[test]
fn constant_is_reproduced_in_the_interior() {
    let d = grid(64);
    let (delta, r) = (0.05, 0.5);
    let kappa = 1.0 - 2.0 * delta / r;
    let out = mollify_star(&VectorField::constant(d, [1.5, -2.0]), delta, r).unwrap();
    let depth = delta + (1.0 - kappa) * d.diameter() + 2.0 * d.h();
    let mut checked = 0;
    for (k, v) in out.values().iter().enumerate() {
        let p = d.cell_center(out.cell_of(k));
        if 0.5 - p[0].abs().max(p[1].abs()) > depth {
            assert!(
                (v[0] - 1.5).abs() < 1e-10 && (v[1] + 2.0).abs() < 1e-10,
                "{v:?} at {p:?}"
            );
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn large_delta_is_rejected() {
    let d = grid(32);
    let xi = VectorField::constant(d, [1.0, 0.0]);
    assert!(matches!(
        mollify_star(&xi, 0.125, 0.5),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn smooth_field_converges_at_first_order() {
    let d = grid(256);
    let bump = |p: [f64; 2]| (PI * (p[0] + 0.5)).sin().powi(2) * (PI * (p[1] + 0.5)).sin().powi(2);
    let xi = VectorField::from_fn(d, |p| [bump(p), p[0] * bump(p)]);
    let errs: Vec<f64> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&delta| {
            mollify_star(&xi, delta, 0.5)
                .unwrap()
                .sub(&xi)
                .unwrap()
                .max_norm()
        })
        .collect();
    let rate = (errs[0] / errs[2]).log2() / 2.0;
    assert!(rate >= 1.0, "errors {errs:?}, rate {rate}");
}

#[test]
fn dirichlet_data_stays_dirichlet() {
    let d = grid(64);
    let phi = ScalarField::dirichlet_from_fn(d, |p| (0.5 - p[0].abs()).min(0.5 - p[1].abs()));
    for delta in [0.1, 0.05, 0.02] {
        let out = mollify_star_scalar(&phi, delta, 0.5).unwrap();
        assert!(out.is_dirichlet());
    }
}

#[test]
fn jensen_for_x_independent_modular() {
    let d = grid(64);
    let m = ModularFunction::power(FieldSpec::constant(2.5), false, d).unwrap();
    let xi = VectorField::from_fn(d, |p| if p[0] > 0.1 { [0.5, 0.2] } else { [-0.3, 0.0] });
    let (trace, sup) = uniform_modular_bound_study(&m, &xi, &[0.1, 0.05, 0.025], 0.5).unwrap();
    assert!(sup <= 1.0 + 1e-9, "{trace:?}");
}

#[test]
fn tent_gradient_converges_in_square_modular() {
    let d = grid(128);
    let m = ModularFunction::power(FieldSpec::constant(2.0), false, d).unwrap();
    let phi = ScalarField::dirichlet_from_fn(d, |p| (0.5 - p[0].abs()).min(0.5 - p[1].abs()));
    let trace =
        approximation_study(&m, &phi, &[0.1, 0.05, 0.025], 0.5, &DYADIC_LAMBDAS, 1e-2).unwrap();
    let at_one = trace.get("lambda=1").unwrap();
    assert!(at_one[0] > at_one[1] && at_one[1] > at_one[2], "{at_one:?}");
    assert!(trace.witness.is_some());
}

#[test]
fn zero_phi_gives_zero_trace() {
    let d = grid(32);
    let m = ModularFunction::power(FieldSpec::constant(2.0), false, d).unwrap();
    let trace = approximation_study(
        &m,
        &ScalarField::zeros(d),
        &[0.1, 0.05],
        0.5,
        &DYADIC_LAMBDAS,
        1e-2,
    )
    .unwrap();
    assert!(trace
        .series
        .iter()
        .all(|s| s.values.iter().all(|v| *v == 0.0)));
}
