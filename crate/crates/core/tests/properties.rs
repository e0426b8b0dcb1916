use proptest::prelude::*;

use frame_kahler::catalog::{
    load, parse_structure, ppwave, run_suite, serialize_structure, warped_alphaneg, warped_complete, Model, PpTwist,
    Structure, Suite, IDS,
};
use frame_kahler::frame::{
    connection_jets, consistency_suite, curvature_jets, permutation_invariance, sectional_from_jets, FrameStructure,
};
use frame_kahler::grid::Grid;
use frame_kahler::kahler::{build_kahler, check_admissible, ricci_form};
use frame_kahler::report::VerificationReport;
use frame_kahler::scalar::{make_closed_form, KSet};

fn kset() -> KSet {
    KSet::new(&["tau", "x", "y"]).unwrap()
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("tau".to_string()),
        (-2.0f64..2.0).prop_map(|c| format!("({c:?})")),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.prop_map(|a| format!("exp(({a})/4)")),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

/// Twists that stay negative on the unit box.
fn twist() -> impl Strategy<Value = String> {
    (1.5f64..3.0, -0.5f64..0.5, -0.5f64..0.5, -0.4f64..0.4)
        .prop_map(|(c0, c1, c2, c3)| format!("-({c0:?} + ({c1:?})*x^2 + ({c2:?})*sin(y) + ({c3:?})*x*y)"))
}

fn check_max(rep: &VerificationReport, suffix: &str, tol: f64) {
    let c = rep
        .checks
        .iter()
        .find(|c| c.id == suffix || c.id.ends_with(&format!(".{suffix}")))
        .unwrap_or_else(|| panic!("no `{suffix}` check in {rep}"));
    let r = c.residual.unwrap_or_else(|| panic!("`{}` not finite", c.id));
    assert!(r <= tol, "`{}` = {r:e} > {tol:e}", c.id);
}

fn frame_values(s: &FrameStructure, p: &[f64]) -> Vec<f64> {
    let n = s.n();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            out.push(s.g(a, b).value(p).unwrap());
            for c in 0..n {
                out.push(s.c(a, b, c).value(p).unwrap());
            }
        }
        for i in 0..s.kset().len() {
            out.push(s.d(a, i).value(p).unwrap());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partials_match_finite_differences(e in expr(), p in point()) {
        let f = make_closed_form(&kset(), &e).unwrap();
        let h = 1e-5;
        for var in 0..3 {
            let exact = f.partial(&p, var).unwrap();
            let (mut pp, mut pm) = (p, p);
            pp[var] += h;
            pm[var] -= h;
            let fd = (f.value(&pp).unwrap() - f.value(&pm).unwrap()) / (2.0 * h);
            prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()), "{e}: d{var} {exact} vs {fd}");
        }
    }

    #[test]
    fn mixed_partials_commute(e in expr(), p in point()) {
        let f = make_closed_form(&kset(), &e).unwrap();
        for i in 0..3 {
            for j in 0..i {
                let (a, b) = (f.second_partial(&p, i, j).unwrap(), f.second_partial(&p, j, i).unwrap());
                prop_assert!((a - b).abs() <= 1e-8);
                let lifted = f.lift_partial(i).unwrap().lift_partial(j).unwrap().value(&p).unwrap();
                let swapped = f.lift_partial(j).unwrap().lift_partial(i).unwrap().value(&p).unwrap();
                prop_assert!((lifted - swapped).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn field_arithmetic_is_a_ring(a in expr(), b in expr(), c in expr(), p in point()) {
        let k = kset();
        let (fa, fb, fc) = (make_closed_form(&k, &a).unwrap(), make_closed_form(&k, &b).unwrap(), make_closed_form(&k, &c).unwrap());
        let v = |f: frame_kahler::scalar::ScalarField| f.value(&p).unwrap();
        let tol = |x: f64| 1e-12 * (1.0 + x.abs());
        let l = v(&(&fa * &fb) * &fc);
        prop_assert!((l - v(&fa * &(&fb * &fc))).abs() <= tol(l));
        let l = v(&(&fa + &fb) + &fc);
        prop_assert!((l - v(&fa + &(&fb + &fc))).abs() <= tol(l));
        let l = v(&fa * &(&fb + &fc));
        prop_assert!((l - v(&(&fa * &fb) + &(&fa * &fc))).abs() <= tol(l));
        prop_assert_eq!(v(&fa * &fb), v(&fb * &fa));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_twist_passes_cross_route_checks(t in twist()) {
        let e = ppwave(&PpTwist::Expr(t.clone())).unwrap();
        let grid = Grid::uniform(&kset(), -1.0, 1.0, 2).unwrap();
        let rep = run_suite(&e, Suite::Central, Some(&grid)).unwrap();
        for (id, tol) in [
            ("structure.torsion", 1e-8),
            ("structure.metric_compatibility", 1e-8),
            ("structure.jacobi", 1e-8),
            ("kahler_structure.torsion", 1e-8),
            ("kahler_form.d_omega", 1e-8),
            ("forms.rho_antisymmetric", 1e-7),
            ("forms.rho_closed", 1e-7),
            ("forms.rho_j_invariant", 1e-8),
            ("forms.rho_matches_ricci", 1e-7),
            ("forms.rho_vanishes_on_v", 1e-9),
            ("central.ricci_vanishes_on_v", 1e-8),
        ] {
            check_max(&rep, id, tol);
        }
        prop_assert!(rep.check("central.csc_verdicts_agree").unwrap().passed(), "{t}");
    }

    #[test]
    fn koszul_is_relabeling_invariant(perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(), t in twist()) {
        let e = ppwave(&PpTwist::Expr(t)).unwrap();
        let Model::Central(d) = &e.model else { unreachable!() };
        let grid = Grid::uniform(&kset(), -1.0, 1.0, 2).unwrap();
        let km = build_kahler(d).unwrap();
        for s in [&d.frame, km.frame()] {
            let rep = permutation_invariance(s, &perm, &grid).unwrap();
            prop_assert!(rep.passed, "{perm:?}: {rep}");
        }
    }

    #[test]
    fn central_rho_vanishes_on_k_and_t(t in twist(), p in point()) {
        let e = ppwave(&PpTwist::Expr(t)).unwrap();
        let Model::Central(d) = &e.model else { unreachable!() };
        let km = build_kahler(d).unwrap();
        let rho = ricci_form(&km);
        let r = d.roles;
        for u in [r.k, r.t] {
            for v in 0..4 {
                prop_assert!(rho.component(u, v).unwrap().value(&p).unwrap().abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn constant_twist_ricci_eigenvalue(iota in -3.0f64..-0.2, p in point()) {
        let e = ppwave(&PpTwist::Constant(iota)).unwrap();
        let Model::Central(d) = &e.model else { unreachable!() };
        let km = build_kahler(d).unwrap();
        let q = d.constants.q();
        let fj = km.frame().jets(&p, 2).unwrap();
        let gj = connection_jets(&fj, &p).unwrap();
        let cj = curvature_jets(&fj, &gj, &p).unwrap();
        let want = q * (-p[d.tau]).exp();
        for a in [d.roles.x, d.roles.y] {
            let ratio = cj.ricci(a, a).value() / fj.g(a, a).value();
            prop_assert!((ratio - want).abs() <= 1e-8);
        }
        prop_assert!((cj.scalar().value() - 2.0 * want).abs() <= 1e-8);
    }

    #[test]
    fn round_trip_reproduces_fields(t in twist()) {
        let e = ppwave(&PpTwist::Expr(t)).unwrap();
        let text = serialize_structure(&e.structure()).unwrap();
        let Structure::Admissible(back) = parse_structure(&text).unwrap() else { panic!("case changed") };
        let Model::Central(d) = &e.model else { unreachable!() };
        for p in e.grid.points() {
            for (u, v) in frame_values(&d.frame, &p).iter().zip(frame_values(&back.frame, &p)) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }
        prop_assert_eq!(serialize_structure(&Structure::Admissible(back)).unwrap(), text);
    }

    #[test]
    fn complete_family_sectional_values(lambda in -5.0f64..-0.5) {
        let e = warped_complete(lambda).unwrap();
        let rep = run_suite(&e, Suite::Ke, None).unwrap();
        prop_assert!(rep.passed, "{rep}");
        let Model::Warped(m) = &e.model else { unreachable!() };
        let km = build_kahler(&m.admissible().unwrap()).unwrap();
        let r = km.data().roles;
        for p in e.grid.points() {
            let fj = km.frame().jets(&p, 2).unwrap();
            let gj = connection_jets(&fj, &p).unwrap();
            let cj = curvature_jets(&fj, &gj, &p).unwrap();
            let kt = sectional_from_jets(&fj, &cj, r.k, r.t).unwrap().value();
            let xk = sectional_from_jets(&fj, &cj, r.x, r.k).unwrap().value();
            prop_assert!((kt - 2.0 * lambda / 3.0).abs() <= 1e-8);
            prop_assert!((xk - lambda / 6.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn negative_alpha_warped_invariants(alpha in -4.0f64..-0.1) {
        let e = warped_alphaneg(alpha).unwrap();
        let rep = run_suite(&e, Suite::Ke, None).unwrap();
        prop_assert!(rep.passed, "{rep}");
        check_max(&rep, "forms.rho_h_v_zero", 1e-9);
        check_max(&rep, "family.c_log_derivative", 1e-10);
        check_max(&rep, "admissible.twist_substitution", 1e-10);
        check_max(&rep, "einstein.einstein_residual", 1e-7);
    }
}

#[test]
fn catalog_entries_pass_consistency_and_admissibility() {
    for id in IDS {
        let e = load(id).unwrap();
        let data = match &e.model {
            Model::Central(d) => d.clone(),
            Model::Warped(m) => m.admissible().unwrap(),
        };
        let rep = consistency_suite(&data.frame, &e.grid);
        assert!(rep.passed, "{id}: {rep}");
        let rep = check_admissible(&data, &e.grid);
        assert!(rep.passed, "{id}: {rep}");
        for c in rep
            .checks
            .iter()
            .chain(consistency_suite(&data.frame, &e.grid).checks.iter())
        {
            if c.kind == frame_kahler::report::CheckKind::AtMost {
                assert!(c.residual.unwrap() <= 1e-8, "{id}: {}", c.id);
            }
        }
    }
}

#[test]
fn warped_entries_have_no_mixed_ricci_form() {
    for id in IDS {
        let e = load(id).unwrap();
        if let Model::Warped(_) = e.model {
            let rep = run_suite(&e, Suite::Ke, None).unwrap();
            check_max(&rep, "forms.rho_h_v_zero", 1e-9);
            check_max(&rep, "admissible.twist_substitution", 1e-10);
            check_max(&rep, "family.c_log_derivative", 1e-10);
        }
    }
}
