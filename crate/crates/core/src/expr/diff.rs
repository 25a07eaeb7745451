//! Differentiation and substitution.

use std::collections::BTreeSet;

use super::{normalize, AntiDeriv, Expr, Node};

/// Partial derivative with respect to `var`, normalized.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    normalize(&d_raw(e, var))
}

fn d_raw(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) | Node::Param(_) => Expr::zero(),
        Node::Var(v) => {
            if v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(v) => Expr::add(v.iter().map(|t| d_raw(t, var)).collect()),
        Node::Mul(v) => {
            let mut terms = Vec::new();
            for i in 0..v.len() {
                let di = d_raw(&v[i], var);
                if di.is_zero_literal() {
                    continue;
                }
                let mut factors: Vec<Expr> = v.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()).collect();
                factors.push(di);
                terms.push(Expr::mul(factors));
            }
            Expr::add(terms)
        }
        Node::Pow(b, k) => {
            if !k.depends_on(var) {
                let km1 = Expr::add(vec![k.clone(), Expr::num(-1)]);
                Expr::mul(vec![k.clone(), Expr::pow(b.clone(), km1), d_raw(b, var)])
            } else {
                let inner = Expr::add(vec![
                    Expr::mul(vec![d_raw(k, var), b.clone().ln()]),
                    Expr::mul(vec![k.clone(), d_raw(b, var), b.clone().recip()]),
                ]);
                Expr::mul(vec![e.clone(), inner])
            }
        }
        Node::Exp(a) => Expr::mul(vec![e.clone(), d_raw(a, var)]),
        Node::Ln(a) => Expr::mul(vec![d_raw(a, var), a.clone().recip()]),
        Node::Sqrt(a) => Expr::mul(vec![Expr::rational(1, 2), d_raw(a, var), e.clone().recip()]),
        Node::Sin(a) => Expr::mul(vec![a.clone().cos(), d_raw(a, var)]),
        Node::Cos(a) => Expr::mul(vec![Expr::num(-1), a.clone().sin(), d_raw(a, var)]),
        Node::Tan(a) => Expr::mul(vec![Expr::add(vec![Expr::one(), e.clone().powi(2)]), d_raw(a, var)]),
        Node::AntiDeriv(ad) => {
            let mut terms = Vec::new();
            let du = d_raw(&ad.upper, var);
            if !du.is_zero_literal() {
                let at_upper = if matches!(ad.upper.node(), Node::Var(v) | Node::Param(v) if *v == ad.var) {
                    ad.integrand.clone()
                } else {
                    substitute_raw(&ad.integrand, &[(ad.var.clone(), ad.upper.clone())])
                };
                terms.push(Expr::mul(vec![at_upper, du]));
            }
            if var != ad.var && ad.integrand.depends_on(var) {
                let mut inner = ad.clone();
                inner.integrand = d_raw(&ad.integrand, var);
                terms.push(Expr::antideriv_node(inner));
            }
            Expr::add(terms)
        }
    }
}

/// Simultaneous, capture-free substitution followed by normalization.
pub fn substitute(e: &Expr, bindings: &[(String, Expr)]) -> Expr {
    normalize(&substitute_raw(e, bindings))
}

/// Simultaneous, capture-free substitution without normalization.
pub fn substitute_raw(e: &Expr, bindings: &[(String, Expr)]) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    match e.node() {
        Node::Num(_) => e.clone(),
        Node::Param(n) | Node::Var(n) => bindings
            .iter()
            .find(|(k, _)| k == n)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| e.clone()),
        Node::Add(v) => Expr::add(v.iter().map(|t| substitute_raw(t, bindings)).collect()),
        Node::Mul(v) => Expr::mul(v.iter().map(|t| substitute_raw(t, bindings)).collect()),
        Node::Pow(b, k) => Expr::pow(substitute_raw(b, bindings), substitute_raw(k, bindings)),
        Node::Exp(a) => substitute_raw(a, bindings).exp(),
        Node::Ln(a) => substitute_raw(a, bindings).ln(),
        Node::Sqrt(a) => substitute_raw(a, bindings).sqrt(),
        Node::Sin(a) => substitute_raw(a, bindings).sin(),
        Node::Cos(a) => substitute_raw(a, bindings).cos(),
        Node::Tan(a) => substitute_raw(a, bindings).tan(),
        Node::AntiDeriv(ad) => {
            let upper = substitute_raw(&ad.upper, bindings);
            let inner: Vec<(String, Expr)> = bindings.iter().filter(|(k, _)| *k != ad.var).cloned().collect();
            let captures = inner.iter().any(|(_, v)| v.depends_on(&ad.var));
            let (var, integrand) = if captures {
                let used: BTreeSet<String> = inner.iter().flat_map(|(_, v)| v.free_names()).chain(ad.integrand.free_names()).collect();
                let fresh = (1..).map(|i| format!("{}_{i}", ad.var)).find(|n| !used.contains(n)).unwrap();
                let renamed = substitute_raw(&ad.integrand, &[(ad.var.clone(), Expr::param(&fresh))]);
                (fresh, substitute_raw(&renamed, &inner))
            } else {
                (ad.var.clone(), substitute_raw(&ad.integrand, &inner))
            };
            Expr::antideriv_node(AntiDeriv { var, integrand, base_re: ad.base_re.clone(), base_im: ad.base_im.clone(), upper })
        }
    }
}

/// Substitutes `name := value` and rewrites square roots and half-integer
/// powers of anything that becomes `root²` as powers of `root`, so that no
/// branch cut survives. The result is normalized.
pub fn substitute_square(e: &Expr, name: &str, value: &Expr, root: &Expr) -> Expr {
    let bindings = [(name.to_string(), value.clone())];
    let target = normalize(&root.clone().powi(2));
    normalize(&rewrite_square(e, &bindings, &target, root))
}

fn rewrite_square(e: &Expr, bindings: &[(String, Expr)], target: &Expr, root: &Expr) -> Expr {
    let half_power = match e.node() {
        Node::Sqrt(a) => Some((a, 1)),
        Node::Pow(a, k) => k
            .as_rational()
            .filter(|q| q.denom() == &2.into())
            .and_then(|q| num_traits::ToPrimitive::to_i64(q.numer()))
            .map(|m| (a, m)),
        _ => None,
    };
    if let Some((a, m)) = half_power {
        if &substitute(a, bindings) == target {
            return root.clone().powi(m);
        }
    }
    let go = |t: &Expr| rewrite_square(t, bindings, target, root);
    match e.node() {
        Node::Num(_) | Node::Param(_) | Node::Var(_) | Node::AntiDeriv(_) => substitute_raw(e, bindings),
        Node::Add(v) => Expr::add(v.iter().map(go).collect()),
        Node::Mul(v) => Expr::mul(v.iter().map(go).collect()),
        Node::Pow(b, k) => Expr::pow(go(b), go(k)),
        Node::Exp(a) => go(a).exp(),
        Node::Ln(a) => go(a).ln(),
        Node::Sqrt(a) => go(a).sqrt(),
        Node::Sin(a) => go(a).sin(),
        Node::Cos(a) => go(a).cos(),
        Node::Tan(a) => go(a).tan(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn elementary_rules() {
        assert_eq!(differentiate(&p("x^3"), "x"), normalize(&p("3*x^2")));
        assert_eq!(differentiate(&p("ln(x)"), "x"), normalize(&p("1/x")));
        assert_eq!(differentiate(&p("exp(a*x)"), "x"), normalize(&p("a*exp(a*x)")));
        assert_eq!(differentiate(&p("x^l"), "x"), normalize(&p("l*x^(l-1)")));
        assert_eq!(differentiate(&p("tan(x)"), "x"), normalize(&p("1+tan(x)^2")));
        assert_eq!(differentiate(&p("a*x + zeta^2"), "zeta"), normalize(&p("2*zeta")));
    }

    #[test]
    fn antiderivative_node_differentiates_to_integrand() {
        let a = p("antideriv(x, exp(x^2), 0)");
        assert_eq!(differentiate(&a, "x"), normalize(&p("exp(x^2)")));
        let shifted = substitute_raw(&a, &[("x".into(), p("x^2"))]);
        assert_eq!(differentiate(&shifted, "x"), normalize(&p("2*x*exp(x^4)")));
    }

    #[test]
    fn substitution_is_simultaneous() {
        let e = p("x + l");
        let s = substitute(&e, &[("x".into(), p("l")), ("l".into(), p("x"))]);
        assert_eq!(s, normalize(&p("l + x")));
        let v = p("l*(l+1)/r^2");
        let shifted = substitute(&v, &[("l".into(), p("l+1"))]);
        assert_eq!(shifted, normalize(&p("(l+1)*(l+2)/r^2")));
    }
}
