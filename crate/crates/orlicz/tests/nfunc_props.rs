use orlicz::fields::GridDomain;
use orlicz::nfunc::{
    biconjugate, conjugate, conjugate_brute, default_nodes, fenchel_young_gap, log_nodes,
    m_underbar, Family, FieldSpec, ModularFunction, RadialProfile, UNDERBAR_RATIO_STEPS,
    UNDERBAR_SUBSTEPS,
};
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(128)
}

fn nodes() -> Vec<f64> {
    log_nodes(1e-2, 1e2, 48)
}

/// Random nonnegative tables on a fixed node set, convex or not.
fn table() -> impl Strategy<Value = RadialProfile> {
    prop::collection::vec(0.0..10.0f64, 48).prop_map(|mut v| {
        // mix a growing trend in so the hull is not just the zero line
        let n = nodes();
        for (i, x) in v.iter_mut().enumerate() {
            *x += n[i + 1] * n[i + 1] * 0.5;
        }
        let mut values = vec![0.0];
        values.extend(v);
        RadialProfile::new(n, values).unwrap()
    })
}

fn duals() -> Vec<f64> {
    log_nodes(1e-3, 1e3, 61)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn family() -> impl Strategy<Value = (Family, bool)> {
    prop_oneof![
        (1.1..5.0f64, 0.2..3.0f64).prop_map(|(p, w)| (
            Family::VariableExponentPower {
                exponent: FieldSpec::Affine {
                    base: p,
                    dx: 0.3,
                    dy: 0.0
                },
                weight: FieldSpec::constant(w),
                normalized: true,
            },
            true
        )),
        (1.2..3.0f64, 0.0..2.0f64, 0.1..2.0f64).prop_map(|(p, dq, a)| (
            Family::DoublePhase {
                p,
                q: p + dq,
                weight: FieldSpec::constant(a)
            },
            true
        )),
        (0.2..3.0f64).prop_map(|a| (
            Family::ExpType {
                weight: FieldSpec::constant(a)
            },
            false
        )),
    ]
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn conjugation_reverses_order(f in table(), bumps in prop::collection::vec(0.0..5.0f64, 48)) {
        let mut gv = f.values().to_vec();
        for (g, b) in gv[1..].iter_mut().zip(&bumps) {
            *g += b;
        }
        let g = RadialProfile::new(f.nodes().to_vec(), gv).unwrap();
        let (fc, gc) = (conjugate(&f), conjugate(&g));
        for t in duals() {
            prop_assert!(gc.eval(t) <= fc.eval(t) + 1e-9 * (1.0 + fc.eval(t)), "t = {}", t);
        }
    }

    #[test]
    fn scan_matches_brute_force(f in table()) {
        let c = conjugate(&f);
        let t = duals();
        for (ti, b) in t.iter().zip(conjugate_brute(&f, &t)) {
            prop_assert!(close(c.eval(*ti), b, 1e-10), "t = {}: {} vs {}", ti, c.eval(*ti), b);
        }
    }

    #[test]
    fn biconjugate_is_a_minorant_and_idempotent(f in table()) {
        let b = biconjugate(&f);
        for (x, y) in b.values().iter().zip(f.values()) {
            prop_assert!(*x <= *y + 1e-12 * (1.0 + y));
        }
        let bb = biconjugate(&b);
        for (x, y) in bb.values().iter().zip(b.values()) {
            prop_assert!(close(*x, *y, 1e-9));
        }
        prop_assert!(b.is_convex(1e-9));
    }

    #[test]
    fn third_conjugate_is_the_first(f in table()) {
        let (c, cb) = (conjugate(&f), conjugate(&biconjugate(&f)));
        for t in duals() {
            prop_assert!(close(c.eval(t), cb.eval(t), 1e-9), "t = {}", t);
        }
    }

    #[test]
    fn conjugate_is_convex(f in table()) {
        prop_assert!(conjugate(&f).is_convex(1e-9));
    }

    #[test]
    fn fenchel_young_gap_is_nonnegative(
        (fam, _) in family(),
        cell in 0usize..16,
        xi in (0.0..std::f64::consts::TAU, -2.0..2.0f64),
        eta in (0.0..std::f64::consts::TAU, -2.0..2.0f64),
    ) {
        let m = ModularFunction::new(fam, GridDomain::unit_square(4)).unwrap();
        let r = 10f64.powf(xi.1);
        let t = 10f64.powf(eta.1);
        let x = [r * xi.0.cos(), r * xi.0.sin()];
        let e = [t * eta.0.cos(), t * eta.0.sin()];
        prop_assert!(fenchel_young_gap(&m, cell, x, e).unwrap() >= -1e-8);
    }

    #[test]
    fn fenchel_young_equality_at_the_gradient(
        (fam, smooth) in family(),
        cell in 0usize..16,
        xi in (0.0..std::f64::consts::TAU, -1.0..1.0f64),
    ) {
        let m = ModularFunction::new(fam, GridDomain::unit_square(4)).unwrap();
        let r = 10f64.powf(xi.1);
        let x = [r * xi.0.cos(), r * xi.0.sin()];
        let g = m.grad(cell, x);
        let gap = fenchel_young_gap(&m, cell, x, g).unwrap();
        if smooth {
            let scale = m.value(cell, x) + x[0] * g[0] + x[1] * g[1];
            prop_assert!(gap.abs() <= 1e-6 * (1.0 + scale), "gap {}", gap);
        }
    }

    #[test]
    fn power_conjugate_oracle(p in 1.2..5.0f64) {
        let f = RadialProfile::from_fn(|s| s.powf(p) / p).unwrap();
        let c = conjugate(&f);
        let q = p / (p - 1.0);
        // duals whose primal point sits in the middle two decades
        for s in log_nodes(1e-1, 1e1, 33) {
            let t = s.powf(p - 1.0);
            let exact = t.powf(q) / q;
            prop_assert!((c.eval(t) - exact).abs() <= 1e-3 * exact, "p = {}, t = {}", p, t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn underbar_doubles_within_alpha(p in 1.2..4.5f64, dq in 0.0..3.0f64, alpha in 1.2..4.0f64) {
        let m = ModularFunction::new(
            Family::DoublePhase { p, q: p + dq, weight: FieldSpec::Bump { base: 0.0, amplitude: 1.0 } },
            GridDomain::unit_square(2),
        )
        .unwrap();
        let mu = m_underbar(&m, alpha, UNDERBAR_SUBSTEPS).unwrap();
        let v = mu.values();
        for k in 1..v.len() - UNDERBAR_RATIO_STEPS {
            prop_assert!(v[k + UNDERBAR_RATIO_STEPS] <= 2f64.powf(alpha) * v[k] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn default_grid_is_pinned_at_zero() {
    let n = default_nodes();
    assert_eq!(n[0], 0.0);
    assert!(n.windows(2).all(|w| w[1] > w[0]));
}
