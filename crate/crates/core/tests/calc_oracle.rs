use std::sync::Arc;

use jetq_core::calc::{
    differentiate, evaluate, fd_mixed_derivative, mixed_log_derivative, partial, DerivativeIndex,
    DerivativeTable, EvalPoint, ORDER_CAP,
};
use jetq_core::dsl::{log, Expr, ParameterBinding, Var};
use jetq_core::{Complex64, Error};
use proptest::prelude::*;

fn arc(e: Expr) -> Arc<Expr> {
    Arc::new(e)
}

fn shifted(c: f64, e: Expr) -> Expr {
    Expr::Add(arc(Expr::real(c)), arc(e))
}

fn var() -> impl Strategy<Value = Var> {
    prop_oneof![
        (1..=2usize).prop_map(Var::z),
        (1..=2usize).prop_map(Var::wb)
    ]
}

/// Expressions that stay inside the evaluation domain near the origin.
fn tame_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => var().prop_map(Expr::Var),
        1 => (-1.0..1.0f64).prop_map(Expr::real),
        1 => (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Expr::constant(Complex64::new(a, b))),
        1 => Just(Expr::param("a")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(arc(a), arc(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(arc(a), arc(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(arc(a), arc(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Div(arc(a), arc(shifted(3.0, b)))),
            (
                inner.clone(),
                prop::sample::select(vec![-1.5, -0.5, 0.5, 1.5, 2.0, 3.0])
            )
                .prop_map(|(a, p)| Expr::Pow(arc(shifted(2.5, a)), arc(Expr::real(p)))),
            inner
                .clone()
                .prop_map(|a| Expr::Exp(arc(Expr::Mul(arc(Expr::real(0.5)), arc(a))))),
            inner.clone().prop_map(|a| Expr::Log(arc(shifted(3.0, a)))),
            inner.prop_map(|a| Expr::Neg(arc(a))),
        ]
    })
}

fn small() -> impl Strategy<Value = Complex64> {
    (-0.3..0.3f64, -0.3..0.3f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn point() -> impl Strategy<Value = EvalPoint> {
    (
        prop::collection::vec(small(), 2),
        prop::collection::vec(small(), 2),
    )
        .prop_map(|(z, w)| EvalPoint::new(z, w))
}

fn index() -> impl Strategy<Value = DerivativeIndex> {
    prop::collection::vec(var(), 1..=3).prop_map(|vs| {
        vs.into_iter()
            .fold(DerivativeIndex::zero(2), |idx, v| match v.slot {
                jetq_core::dsl::Slot::Z => idx.dz(v.index, 1),
                jetq_core::dsl::Slot::Wb => idx.dwb(v.index, 1),
            })
    })
}

fn params() -> ParameterBinding {
    ParameterBinding::from([("a".to_string(), 0.7)])
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symbolic_matches_finite_differences(e in tame_expr(), idx in index(), at in point()) {
        let p = params();
        let sym = differentiate(&e, &idx).and_then(|d| evaluate(&d, &at, &p));
        let fd = fd_mixed_derivative(&e, &idx, &at, &p, 1e-4);
        prop_assume!(sym.is_ok() && fd.is_ok());
        let (sym, fd) = (sym.unwrap(), fd.unwrap());
        prop_assert!(close(sym, fd, 1e-5), "{e} {idx:?}: {sym} vs {fd}");
    }

    #[test]
    fn mixed_partials_commute(e in tame_expr(), u in var(), v in var(), at in point()) {
        let p = params();
        let uv = evaluate(&partial(&partial(&e, u), v), &at, &p);
        let vu = evaluate(&partial(&partial(&e, v), u), &at, &p);
        prop_assume!(uv.is_ok() && vu.is_ok());
        let (uv, vu) = (uv.unwrap(), vu.unwrap());
        prop_assert!(close(uv, vu, 1e-12), "{uv} vs {vu}");
    }

    #[test]
    fn product_rule_pointwise(f in tame_expr(), g in tame_expr(), v in var(), at in point()) {
        let p = params();
        let finite = |e: &Expr| evaluate(e, &at, &p).is_ok_and(|x| x.is_finite());
        prop_assume!(finite(&f) && finite(&g));
        let fg = Expr::Mul(arc(f.clone()), arc(g.clone()));
        let lhs = evaluate(&partial(&fg, v), &at, &p);
        let rhs = (|| -> jetq_core::Result<Complex64> {
            Ok(evaluate(&partial(&f, v), &at, &p)? * evaluate(&g, &at, &p)?
                + evaluate(&f, &at, &p)? * evaluate(&partial(&g, v), &at, &p)?)
        })();
        prop_assume!(lhs.is_ok() && rhs.is_ok());
        let (lhs, rhs) = (lhs.unwrap(), rhs.unwrap());
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn log_derivative_is_quotient(e in tame_expr(), v in var(), at in point()) {
        let p = params();
        let e = shifted(3.0, e);
        let lhs = evaluate(&partial(&log(e.clone()), v), &at, &p);
        let rhs = evaluate(&partial(&e, v), &at, &p).and_then(|d| Ok(d / evaluate(&e, &at, &p)?));
        prop_assume!(lhs.is_ok() && rhs.is_ok());
        let (lhs, rhs) = (lhs.unwrap(), rhs.unwrap());
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn reflected_products_are_hermitian(e in tame_expr(), z in prop::collection::vec(small(), 2), a in 0..3usize, b in 0..3usize) {
        let p = params();
        let k = Expr::Mul(arc(e.clone()), arc(e.reflect()));
        let at = EvalPoint::diagonal(&z);
        let mut t = DerivativeTable::new(k);
        let ab = t.eval(&DerivativeIndex::zero(2).dz(1, a).dwb(2, b), &at, &p);
        let ba = t.eval(&DerivativeIndex::zero(2).dz(2, b).dwb(1, a), &at, &p);
        prop_assume!(ab.is_ok() && ba.is_ok());
        prop_assert!(close(ab.unwrap(), ba.unwrap().conj(), 1e-12));
    }

    #[test]
    fn table_agrees_with_direct_differentiation(e in tame_expr(), idx in index(), at in point()) {
        let p = params();
        let direct = differentiate(&e, &idx).and_then(|d| evaluate(&d, &at, &p));
        let cached = DerivativeTable::new(e).eval(&idx, &at, &p);
        prop_assert_eq!(direct, cached);
    }
}

#[test]
fn order_cap_is_enforced() {
    let e = Expr::z(1);
    let idx = DerivativeIndex::zero(1).dz(1, ORDER_CAP + 1);
    assert_eq!(
        differentiate(&e, &idx),
        Err(Error::OrderCapExceeded {
            order: ORDER_CAP + 1,
            cap: ORDER_CAP
        })
    );
    assert!(differentiate(&e, &DerivativeIndex::zero(1).dz(1, ORDER_CAP)).is_ok());
}

#[test]
fn disc_curvature_through_both_routes() {
    let k = jetq_core::dsl::parse("(1 - z1*wb1)^(-l)", 1).unwrap();
    let p = ParameterBinding::from([("l".to_string(), 2.0)]);
    for r in [0.0, 0.2, 0.5] {
        let z = [Complex64::new(r, 0.0)];
        let v = mixed_log_derivative(&k, 1, 1, &z, &p).unwrap();
        let want = 2.0 / (1.0 - r * r).powi(2);
        assert!((v.re - want).abs() < 1e-12 * want && v.im.abs() < 1e-14);
    }
}
