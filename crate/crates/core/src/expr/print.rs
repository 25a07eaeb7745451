//! Text rendering. The output parses back to an expression with the same
//! normal form.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{Expr, Node, Q};

const SUM: u8 = 1;
const NEG: u8 = 2;
const PROD: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn render_q(q: &Q) -> (String, u8) {
    if q.is_integer() {
        let s = q.numer().to_string();
        let p = if q.is_negative() { NEG } else { ATOM };
        (s, p)
    } else {
        let p = if q.is_negative() { NEG } else { PROD };
        (format!("{}/{}", q.numer(), q.denom()), p)
    }
}

fn paren(s: (String, u8), min: u8) -> String {
    if s.1 < min {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Num(q) => q.is_negative(),
        Node::Mul(v) => matches!(v[0].node(), Node::Num(q) if q.is_negative()),
        _ => false,
    }
}

fn render_call(name: &str, a: &Expr) -> (String, u8) {
    (format!("{name}({})", render(a).0), ATOM)
}

fn render_product(factors: &[Expr]) -> (String, u8) {
    let mut coeff = Q::one();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in factors {
        match f.node() {
            Node::Num(q) => coeff *= q,
            Node::Pow(b, e) if matches!(e.node(), Node::Num(k) if k.is_integer() && k.is_negative()) => {
                let k = e.as_rational().unwrap().abs();
                den.push(Expr::pow(b.clone(), Expr::q(k)));
            }
            _ => num.push(f.clone()),
        }
    }
    let negative = coeff.is_negative();
    let coeff = coeff.abs();
    let mut num_parts: Vec<String> = Vec::new();
    if !coeff.numer().is_one() || num.is_empty() {
        num_parts.push(coeff.numer().to_string());
    }
    for f in &num {
        num_parts.push(paren(render(f), PROD));
    }
    let mut den_parts: Vec<String> = Vec::new();
    if !coeff.denom().is_one() {
        den_parts.push(coeff.denom().to_string());
    }
    for f in &den {
        den_parts.push(paren(render(f), POW));
    }
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    s.push_str(&num_parts.join("*"));
    match den_parts.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&den_parts[0]);
        }
        _ => {
            s.push_str("/(");
            s.push_str(&den_parts.join("*"));
            s.push(')');
        }
    }
    let single = num_parts.len() == 1 && den_parts.is_empty();
    let prec = if negative {
        NEG
    } else if single && num.len() == 1 {
        render(&num[0]).1
    } else if single && num.is_empty() {
        ATOM
    } else {
        PROD
    };
    (s, prec)
}

fn render(e: &Expr) -> (String, u8) {
    match e.node() {
        Node::Num(q) => render_q(q),
        Node::Param(n) | Node::Var(n) => (n.clone(), ATOM),
        Node::Add(terms) => {
            let mut s = render(&terms[0]).0;
            for t in &terms[1..] {
                if is_negative_term(t) {
                    s.push('-');
                    s.push_str(&paren(render(&-t), NEG + 1));
                } else {
                    s.push('+');
                    s.push_str(&render(t).0);
                }
            }
            (s, SUM)
        }
        Node::Mul(factors) => render_product(factors),
        Node::Pow(b, x) => {
            if matches!(x.node(), Node::Num(k) if k.is_integer() && k.is_negative()) {
                return render_product(std::slice::from_ref(e));
            }
            let base = paren(render(b), ATOM);
            let exp = paren(render(x), POW);
            (format!("{base}^{exp}"), POW)
        }
        Node::Exp(a) => render_call("exp", a),
        Node::Ln(a) => render_call("ln", a),
        Node::Sqrt(a) => render_call("sqrt", a),
        Node::Sin(a) => render_call("sin", a),
        Node::Cos(a) => render_call("cos", a),
        Node::Tan(a) => render_call("tan", a),
        Node::AntiDeriv(ad) => {
            let mut s = format!("antideriv({},{},{}", ad.var, render(&ad.integrand).0, render_q(&ad.base_re).0);
            let default_upper = matches!(ad.upper.node(), Node::Var(v) | Node::Param(v) if *v == ad.var);
            if !ad.base_im.is_zero() || !default_upper {
                s.push(',');
                s.push_str(&render_q(&ad.base_im).0);
            }
            if !default_upper {
                s.push(',');
                s.push_str(&render(&ad.upper).0);
            }
            s.push(')');
            (s, ATOM)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{normalize, parse};

    fn show(s: &str) -> String {
        normalize(&parse(s).unwrap()).to_string()
    }

    #[test]
    fn prints_compact_forms() {
        assert_eq!(show("2/x^2"), "2/x^2");
        assert_eq!(show("-2*x^(-2)"), "-2/x^2");
        assert_eq!(show("x/2"), "x/2");
        assert_eq!(show("(x+1)^2"), "x^2+2*x+1");
        assert_eq!(show("sqrt(x)"), "x^(1/2)");
        assert_eq!(show("antideriv(x, 1/x, 1, 1)"), "antideriv(x,1/x,1,1)");
    }

    #[test]
    fn round_trips_through_parser() {
        for s in [
            "r^(l+2)*(r^2-3/2)*exp(-r^2/2)",
            "(-zeta-sqrt(-lambda))/(-zeta+sqrt(-lambda))*exp(-2*sqrt(-lambda)*x)",
            "(2^x)^(1/3) - 3/(x*y)",
            "-x^2 + tan(x)/cos(3*x)",
            "antideriv(x, exp(x^2)/x^2, 1, 1) * x",
        ] {
            let n = normalize(&parse(s).unwrap());
            let back = normalize(&parse(&n.to_string()).unwrap());
            assert_eq!(n, back, "{s} -> {n}");
        }
    }
}
