use orlicz::fields::{GridDomain, ScalarField};
use orlicz::nfunc::{Family, FieldSpec, ModularFunction};
use orlicz::poincare::Candidate;
use orlicz::solver::{
    apriori_check, convergence_diagnostics, radiation_profile, renormalized_residual,
    smooth_battery, solve_bounded, truncated_sequence, Cutoff, EllipticProblem, Operator,
    OperatorFamily, OperatorSpec, SourceSpec,
};
use orlicz::Error;

fn problem(n: usize, p: f64, source: SourceSpec) -> EllipticProblem {
    let d = GridDomain::unit_square(n);
    let op = Operator::new(
        OperatorSpec {
            family: OperatorFamily::WeightedPxLaplacian {
                exponent: FieldSpec::constant(p),
                weight: FieldSpec::constant(1.0),
            },
            eps_reg: 0.0,
            c_a: 1.0,
        },
        d,
    )
    .unwrap();
    let m = ModularFunction::new(
        Family::VariableExponentPower {
            exponent: FieldSpec::constant(p),
            weight: FieldSpec::constant(1.0),
            normalized: true,
        },
        d,
    )
    .unwrap();
    EllipticProblem::new(op, source.sample(&d).unwrap(), m).unwrap()
}

fn bounded_source() -> SourceSpec {
    SourceSpec::Field {
        field: FieldSpec::Bump {
            base: 1.0,
            amplitude: 2.0,
        },
    }
}

#[test]
fn schedule_beyond_the_source_bound_repeats_the_solution() {
    let pb = problem(16, 2.5, bounded_source());
    let run = truncated_sequence(&pb, &[5.0, 10.0, 100.0], 1e-10, 20_000).unwrap();
    let direct = solve_bounded(&pb, &pb.source, 1e-10, 20_000).unwrap();
    for u in &run.snapshots {
        for (a, b) in u.values().iter().zip(direct.u.values()) {
            assert!((a - b).abs() <= 1e-8 * direct.u.max_abs());
        }
    }
}

#[test]
fn empty_or_nonpositive_schedule_is_rejected() {
    let pb = problem(8, 2.0, bounded_source());
    assert!(matches!(
        truncated_sequence(&pb, &[], 1e-9, 100),
        Err(Error::Input(_))
    ));
    assert!(matches!(
        truncated_sequence(&pb, &[1.0, 0.0], 1e-9, 100),
        Err(Error::Input(_))
    ));
}

#[test]
fn apriori_on_zero_data_is_zero() {
    let pb = problem(8, 2.0, SourceSpec::Zero);
    let run = truncated_sequence(&pb, &[1.0, 2.0], 1e-9, 100).unwrap();
    let t = apriori_check(&pb, &run, &[1.0, 2.0], 1.0, 1e-2).unwrap();
    assert!(t.pass);
    for col in ["modular", "conjugate_modular", "ratio", "conjugate_ratio"] {
        assert!(t.table.column(col).unwrap().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn apriori_ratios_are_bounded_and_saturate_in_k() {
    let pb = problem(
        32,
        2.0,
        SourceSpec::Singular {
            center: [0.5, 0.5],
            power: 1.0,
            scale: 1.0,
        },
    );
    let run = truncated_sequence(&pb, &[1.0, 4.0, 16.0], 1e-9, 20_000).unwrap();
    let ks = [0.01, 0.1, 1.0, 10.0, 100.0];
    let t = apriori_check(&pb, &run, &ks, 1.0, 1e-2).unwrap();
    assert!(t.pass, "{:?}", t.witness);
    let ratio = t.table.column("ratio").unwrap();
    let modular = t.table.column("modular").unwrap();
    assert!(ratio.iter().all(|r| *r < 1.0));
    // once k exceeds max |u| the truncation is inactive and the modular stops growing
    let top = run.last().max_abs();
    assert!(top < 10.0);
    let last = (run.snapshots.len() - 1) * ks.len();
    assert_eq!(modular[last + 3], modular[last + 4]);
    assert!(ratio[last + 4] < ratio[last + 3]);
}

#[test]
fn apriori_rejects_bad_constants() {
    let pb = problem(8, 2.0, bounded_source());
    let run = truncated_sequence(&pb, &[1.0], 1e-9, 10_000).unwrap();
    assert!(matches!(
        apriori_check(&pb, &run, &[1.0], 0.0, 1e-2),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        apriori_check(&pb, &run, &[-1.0], 1.0, 1e-2),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn radiation_vanishes_above_the_maximum() {
    let pb = problem(
        24,
        1.8,
        SourceSpec::Singular {
            center: [0.5, 0.5],
            power: 1.0,
            scale: 4.0,
        },
    );
    let run = truncated_sequence(&pb, &[8.0], 1e-9, 20_000).unwrap();
    let u = run.last();
    let levels: Vec<f64> = (0..12).map(|l| l as f64).collect();
    let r = radiation_profile(u, &pb.operator, &levels).unwrap();
    assert!(r.is_nonnegative());
    let top = u.max_abs();
    for (l, f) in r.levels.iter().zip(&r.flux) {
        if *l >= top {
            assert_eq!(*f, 0.0);
        }
    }
    assert!(r.flux[0] > 0.0);
}

#[test]
fn renormalized_residual_with_zero_cutoff_is_zero() {
    let pb = problem(16, 2.0, bounded_source());
    let u = solve_bounded(&pb, &pb.source, 1e-10, 10_000).unwrap().u;
    let phi = Candidate::Mode { k: 1, l: 2 }.sample(pb.domain());
    // cutoff supported far away from the range of u
    let h = Cutoff::new(1e3, 1.0, 0.0, 2).unwrap();
    assert_eq!(
        renormalized_residual(&u, &pb.operator, &pb.source, &h, &phi).unwrap(),
        0.0
    );
}

#[test]
fn plateau_cutoff_gives_the_weak_residual() {
    let pb = problem(32, 3.0, bounded_source());
    let u = solve_bounded(&pb, &pb.source, 1e-11, 20_000).unwrap().u;
    let h = Cutoff::new(0.0, 2.0 * u.max_abs() + 2.0, u.max_abs() + 1.0, 2).unwrap();
    for phi in smooth_battery(6, 3) {
        let r = renormalized_residual(&u, &pb.operator, &pb.source, &h, &phi.sample(pb.domain()))
            .unwrap();
        assert!(r < 1e-8, "{r}");
    }
}

#[test]
fn renormalized_residual_needs_dirichlet_test_fields() {
    let pb = problem(8, 2.0, bounded_source());
    let one = ScalarField::from_fn(*pb.domain(), |_| 1.0);
    let h = Cutoff::new(0.0, 1.0, 0.0, 2).unwrap();
    assert!(matches!(
        renormalized_residual(&pb.source, &pb.operator, &pb.source, &h, &one),
        Err(Error::Input(_))
    ));
}

#[test]
fn cutoff_derivative_matches_differences() {
    let h = Cutoff::new(0.5, 2.0, 0.5, 3).unwrap();
    for t in [-1.2, -0.4, 1.3, 1.9, 2.3] {
        let fd = (h.value(t + 1e-6) - h.value(t - 1e-6)) / 2e-6;
        assert!((fd - h.derivative(t)).abs() < 1e-6, "t = {t}");
    }
    assert_eq!(h.value(0.5), 1.0);
    assert_eq!(h.value(3.0), 0.0);
    assert!(Cutoff::new(0.0, 1.0, 1.0, 2).is_err());
}

#[test]
fn bounded_data_has_vanishing_distances() {
    let pb = problem(16, 2.0, bounded_source());
    let run = truncated_sequence(&pb, &[4.0, 8.0, 16.0, 32.0], 1e-10, 20_000).unwrap();
    let c =
        convergence_diagnostics(&pb, &run, &[1.0, 4.0], 2.0, 4.0, &smooth_battery(4, 0)).unwrap();
    for (_, t) in &c.distances {
        assert!(t.get("distance").unwrap().iter().all(|d| *d < 1e-9));
    }
    for (_, gap) in &c.cauchy_gaps {
        assert!(*gap < 1e-9);
    }
    assert!(c.level_shape_ok);
}

#[test]
fn convergence_needs_three_snapshots() {
    let pb = problem(8, 2.0, bounded_source());
    let run = truncated_sequence(&pb, &[1.0, 2.0], 1e-9, 10_000).unwrap();
    assert!(matches!(
        convergence_diagnostics(&pb, &run, &[1.0], 2.0, 4.0, &smooth_battery(2, 0)),
        Err(Error::Input(_))
    ));
}
