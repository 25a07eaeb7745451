use std::collections::BTreeMap;

use darboux_kit::expr::{antiderivative, differentiate, eval_at, is_zero, normalize, parse, Expr, C64};
use darboux_kit::integrability::{field_membership, Membership};
use proptest::prelude::*;

fn poly() -> impl Strategy<Value = String> {
    prop::collection::vec(-4i64..=4, 1..4).prop_map(|cs| {
        let terms: Vec<String> = cs.iter().enumerate().map(|(k, c)| format!("({c})*x^{k}")).collect();
        terms.join("+")
    })
}

/// Rational in `x` with a denominator free of zeros near the sample point.
fn rational() -> impl Strategy<Value = String> {
    (poly(), poly(), 1i64..4).prop_map(|(n, d, s)| format!("({n})/(({d})^2+{s})"))
}

fn term() -> impl Strategy<Value = String> {
    prop_oneof![
        rational(),
        rational().prop_map(|r| format!("exp({r})")),
        rational().prop_map(|r| format!("ln(({r})^2+1)")),
        (rational(), 1i64..4).prop_map(|(r, k)| format!("(({r})^2+{k})^(1/2)")),
        rational().prop_map(|r| format!("sin({r})")),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    prop::collection::vec((term(), prop_oneof![Just("+"), Just("*"), Just("-")]), 1..4).prop_map(|parts| {
        let mut s = String::new();
        for (k, (t, op)) in parts.iter().enumerate() {
            if k > 0 {
                s.push_str(op);
            }
            s.push('(');
            s.push_str(t);
            s.push(')');
        }
        s
    })
}

fn at(e: &Expr, x: f64) -> Option<C64> {
    let point: BTreeMap<String, C64> = [("x".to_string(), C64::new(x, 0.3))].into();
    eval_at(e, &point).ok()
}

fn close(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-7 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(s in expr()) {
        let n = normalize(&parse(&s).unwrap());
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn normalize_preserves_values(s in expr(), x in 0.2f64..2.0) {
        let e = parse(&s).unwrap();
        if let (Some(a), Some(b)) = (at(&e, x), at(&normalize(&e), x)) {
            prop_assert!(close(a, b), "{} vs {} at {}", a, b, x);
        }
    }

    #[test]
    fn printing_round_trips(s in expr()) {
        let n = normalize(&parse(&s).unwrap());
        let again = normalize(&parse(&n.to_string()).unwrap());
        prop_assert_eq!(again, n);
    }

    #[test]
    fn antiderivative_differentiates_back(s in expr()) {
        let e = parse(&s).unwrap();
        let a = antiderivative(&e, "x").unwrap();
        let back = differentiate(&a, "x") - e;
        prop_assert!(is_zero(&back).unwrap().is_zero(), "{}", a);
    }

    #[test]
    fn zero_test_accepts_identities(s in expr(), t in rational()) {
        let e = parse(&s).unwrap();
        let r = parse(&t).unwrap();
        let rearranged = (e.clone() + r.clone()) * (e.clone() - r.clone()) - (e.clone() * e - r.clone() * r);
        prop_assert!(is_zero(&rearranged).unwrap().is_zero());
    }

    #[test]
    fn zero_test_rejects_perturbations(s in expr(), k in 1i64..50) {
        let e = parse(&s).unwrap();
        let bumped = e.clone() + Expr::rational(1, k) - e;
        prop_assert!(!is_zero(&bumped).unwrap().is_zero());
    }

    #[test]
    fn membership_is_monotone(r in rational(), q in poly()) {
        let r = parse(&r).unwrap();
        let base = field_membership(&r);
        prop_assert_eq!(base, Membership::Rational);
        let q = parse(&format!("x*(1+x^2)+{q}")).unwrap();
        let nonzero = r.clone() * r.clone() + Expr::one();
        let with_exp = field_membership(&(nonzero * q.clone().exp()));
        prop_assert!(with_exp >= base);
        prop_assert_eq!(with_exp, Membership::RationalPlusExpLog);
        let with_ln = field_membership(&(r + (q * parse("x^2+1").unwrap()).ln()));
        prop_assert!(with_ln >= base);
    }
}
