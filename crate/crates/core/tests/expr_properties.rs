use proptest::prelude::*;
use sasakian_core::expr::{derivative_oracle, Jet, ScalarExpr, VarSpace};

const DIM: usize = 3;

/// Random expression sources in `x0, x1, x2` that stay smooth and moderate on
/// `[-1, 1]³`.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0..DIM).prop_map(|i| format!("x{i}")),
        (-2.0..2.0f64).prop_map(|c| format!("({c:.3})")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}+{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}-{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2+cos({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1+({a})^2)")),
            inner.clone().prop_map(|a| format!("ln(2+sin({a}))")),
            inner.clone().prop_map(|a| format!("(sin({a}))^3")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, DIM)
}

fn parse(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src, &VarSpace::chart(DIM)).unwrap()
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(1.0)
}

fn jet_close(a: &Jet, b: &Jet, rel: f64) -> Result<(), TestCaseError> {
    let scale = a.val().abs().max(b.val().abs());
    prop_assert!(close(a.val(), b.val(), rel, scale), "value {} vs {}", a.val(), b.val());
    for i in 0..DIM {
        prop_assert!(close(a.grad(i), b.grad(i), rel, scale.max(a.grad(i).abs())));
        for j in 0..DIM {
            prop_assert!(close(a.hess(i, j), b.hess(i, j), rel, scale.max(a.hess(i, j).abs())));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn jets_match_the_difference_oracle(src in source(), p in point()) {
        let e = parse(&src);
        let jet = e.jet_at(&p).unwrap();
        let fd = derivative_oracle(&e, &p, 1e-3).unwrap();
        let scale = fd.value.abs()
            .max(fd.partials.iter().fold(0.0, |m, v| m.max(v.abs())))
            .max(fd.hessian.amax());
        prop_assert!(close(jet.val(), fd.value, 1e-12, scale));
        for i in 0..DIM {
            prop_assert!(close(jet.grad(i), fd.partials[i], 1e-6, scale),
                "{src}: ∂{i} {} vs {}", jet.grad(i), fd.partials[i]);
            for j in 0..DIM {
                prop_assert!(close(jet.hess(i, j), fd.hessian[(i, j)], 1e-6, scale),
                    "{src}: ∂{i}∂{j} {} vs {}", jet.hess(i, j), fd.hessian[(i, j)]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jets_are_linear(a in source(), b in source(), s in -3.0..3.0f64, t in -3.0..3.0f64, p in point()) {
        let combined = parse(&format!("({s:?})*({a})+({t:?})*({b})")).jet_at(&p).unwrap();
        let ja = parse(&a).jet_at(&p).unwrap();
        let jb = parse(&b).jet_at(&p).unwrap();
        let mut expected = Jet::constant(0.0);
        expected += Jet::constant(s) * ja;
        expected += Jet::constant(t) * jb;
        jet_close(&combined, &expected, 1e-12)?;
    }

    #[test]
    fn jets_obey_the_product_rule(a in source(), b in source(), p in point()) {
        let prod = parse(&format!("({a})*({b})")).jet_at(&p).unwrap();
        let ja = parse(&a).jet_at(&p).unwrap();
        let jb = parse(&b).jet_at(&p).unwrap();
        let scale = ja.val().abs().max(jb.val().abs()).max(1.0).powi(2);
        prop_assert!(close(prod.val(), ja.val() * jb.val(), 1e-12, scale));
        for i in 0..DIM {
            let leibniz = ja.grad(i) * jb.val() + ja.val() * jb.grad(i);
            prop_assert!(close(prod.grad(i), leibniz, 1e-12, scale.max(leibniz.abs())));
            for j in 0..DIM {
                let second = ja.hess(i, j) * jb.val()
                    + ja.grad(i) * jb.grad(j)
                    + ja.grad(j) * jb.grad(i)
                    + ja.val() * jb.hess(i, j);
                prop_assert!(close(prod.hess(i, j), second, 1e-11, scale.max(second.abs())));
            }
        }
    }

    #[test]
    fn printing_round_trips(src in source(), p in point()) {
        let e = parse(&src);
        let printed = e.to_string();
        let back = parse(&printed);
        prop_assert_eq!(back.to_string(), printed.clone());
        let (x, y) = (e.eval_f64(&p).unwrap(), back.eval_f64(&p).unwrap());
        prop_assert!(close(x, y, 1e-14, x.abs()), "{src} → {printed}: {x} vs {y}");
    }
}
