//! Canonical rational-function form and the `normalize` entry points.
//!
//! An expression is mapped to `num / den` with `num`, `den` polynomials in
//! kernels. Invariants of a reduced [`Frac`]:
//! - `gcd(num, den) = 1` in the polynomial ring over the kernels;
//! - `den` has graded-leading coefficient one and at least one monomial free of
//!   exponential kernels;
//! - every monomial carries at most one `Exp(a)` kernel, with exponent one;
//! - inside `a`, each term `c·ln(g)` with rational `c` has `0 <= c < 1`; integer
//!   parts are moved out as powers of `g`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{gcd, grlex, Kernel, Mono, Poly};
use super::{Expr, ExprError, Node, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Frac {
    pub num: Poly,
    pub den: Poly,
}

thread_local! {
    static ARG_CACHE: RefCell<HashMap<Expr, Frac>> = RefCell::new(HashMap::new());
    static SUM_CACHE: RefCell<HashMap<(Expr, Expr), Option<Expr>>> = RefCell::new(HashMap::new());
}

const CACHE_LIMIT: usize = 20_000;

/// Normal form of an exponential argument. Arguments are stored normalized,
/// so conversion cannot fail.
fn arg_frac(a: &Expr) -> Frac {
    if let Some(f) = ARG_CACHE.with(|c| c.borrow().get(a).cloned()) {
        return f;
    }
    let f = to_frac(a).unwrap_or_else(|_| Frac::from_poly(Poly::kernel(a.clone())));
    ARG_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > CACHE_LIMIT {
            c.clear();
        }
        c.insert(a.clone(), f.clone());
    });
    f
}

/// Sum of two exponential arguments; `None` when it cancels.
fn arg_sum(a: &Expr, b: &Expr) -> Option<Expr> {
    let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    if let Some(r) = SUM_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return r;
    }
    let s = arg_frac(a).add(&arg_frac(b)).expect("sum of arguments");
    let r = if s.is_zero() { None } else { Some(s.to_expr()) };
    SUM_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > CACHE_LIMIT {
            c.clear();
        }
        c.insert(key, r.clone());
    });
    r
}

fn mono_exp_arg(m: &Mono) -> Option<(usize, Expr)> {
    let (i, a) = m.exp_part()?;
    let e = m.0[i].1;
    if e == 1 {
        Some((i, a.clone()))
    } else {
        let f = arg_frac(a).mul(&Frac::constant(Q::from_integer(BigInt::from(e)))).ok()?;
        Some((i, f.to_expr()))
    }
}

/// Monomial product with exponential kernels merged.
fn mono_mul_merge(a: &Mono, b: &Mono) -> Mono {
    match (mono_exp_arg(a), mono_exp_arg(b)) {
        (Some((ia, xa)), Some((ib, xb))) => {
            let mut ra = a.clone();
            ra.0.remove(ia);
            let mut rb = b.clone();
            rb.0.remove(ib);
            let rest = ra.mul(&rb);
            match arg_sum(&xa, &xb) {
                Some(s) => rest.mul(&Mono::single(Expr::exp(s), 1)),
                None => rest,
            }
        }
        _ => a.mul(b),
    }
}

/// `(a/g, b/g)` with `g = gcd(a, b)`.
fn cancel(a: &Poly, b: &Poly) -> (Poly, Poly) {
    if b.is_one() || a.is_constant() || b.is_constant() {
        return (a.clone(), b.clone());
    }
    let g = gcd(a, b);
    if g.is_one() {
        (a.clone(), b.clone())
    } else {
        (a.div_exact(&g).expect("gcd divides"), b.div_exact(&g).expect("gcd divides"))
    }
}

fn mul_merge(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::zero();
    for (m1, c1) in &a.terms {
        for (m2, c2) in &b.terms {
            out.add_term(mono_mul_merge(m1, m2), c1 * c2);
        }
    }
    out
}

/// Integer part of a rational, rounding towards negative infinity.
fn floor_q(q: &Q) -> BigInt {
    q.numer().div_floor(q.denom())
}

/// Splits an exponential argument into `Σ k_i ln(g_i)` with integer `k_i` and a
/// remainder. Only polynomial arguments are split.
fn split_log_integers(arg: &Frac) -> Option<(Vec<(Expr, i64)>, Frac)> {
    if !arg.den.is_one() {
        return None;
    }
    let mut parts = Vec::new();
    let mut rest = arg.num.clone();
    for (m, c) in &arg.num.terms {
        if m.0.len() == 1 && m.0[0].1 == 1 {
            if let Node::Ln(g) = m.0[0].0.node() {
                let k = floor_q(c);
                if !k.is_zero() {
                    let k = k.to_i64()?;
                    parts.push((g.clone(), k));
                    rest.add_term(m.clone(), -Q::from_integer(BigInt::from(k)));
                }
            }
        }
    }
    if parts.is_empty() {
        None
    } else {
        Some((parts, Frac::from_poly(rest)))
    }
}

fn has_extractable(p: &Poly) -> bool {
    p.terms.keys().any(|m| match m.exp_part() {
        Some((i, a)) => m.0[i].1 != 1 || split_log_integers(&arg_frac(a)).is_some(),
        None => false,
    })
}

/// Rewrites every monomial whose exponential still hides integer logarithm
/// powers, returning an equal fraction.
fn expand_extractable(p: &Poly) -> Result<Frac, ExprError> {
    let mut plain = Poly::zero();
    let mut acc = Frac::zero();
    for (m, c) in &p.terms {
        match mono_exp_arg(m) {
            Some((i, arg)) => {
                let mut rest = m.clone();
                rest.0.remove(i);
                let e = exp_of(&arg_frac(&arg))?;
                let t = Frac::from_poly(Poly::term(rest, c.clone())).mul(&e)?;
                acc = acc.add(&t)?;
            }
            None => plain.add_term(m.clone(), c.clone()),
        }
    }
    acc.add(&Frac::from_poly(plain))
}

/// `exp(arg)` as a reduced fraction.
pub(crate) fn exp_of(arg: &Frac) -> Result<Frac, ExprError> {
    if arg.is_zero() {
        return Ok(Frac::one());
    }
    if let Some((parts, rest)) = split_log_integers(arg) {
        let mut out = exp_of(&rest)?;
        for (g, k) in parts {
            let base = to_frac(&g)?;
            out = out.mul(&base.powi(k)?)?;
        }
        return Ok(out);
    }
    Ok(Frac::from_poly(Poly::kernel(Expr::exp(arg.to_expr()))))
}

/// `ln(f)` as a reduced fraction.
pub(crate) fn ln_of(f: &Frac) -> Result<Frac, ExprError> {
    if f.is_zero() {
        return Err(ExprError::LogOfZero);
    }
    if f.is_one() {
        return Ok(Frac::zero());
    }
    if f.den.is_one() && f.num.len() == 1 {
        let (m, c) = f.num.terms.iter().next().unwrap();
        if m.0.len() == 1 && m.0[0].1 == 1 {
            if let Node::Exp(a) = m.0[0].0.node() {
                let a = arg_frac(a);
                if c.is_one() {
                    return Ok(a);
                }
                if c.is_positive() {
                    let lc = Frac::kernel(Expr::ln(Expr::q(c.clone())));
                    return lc.add(&a);
                }
            }
        }
    }
    Ok(Frac::kernel(Expr::ln(f.to_expr())))
}

/// Exact `k`-th root of a positive rational, if it exists.
fn rational_root(q: &Q, k: u32) -> Option<Q> {
    fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
        let r = n.nth_root(k);
        if num_traits::pow::Pow::pow(&r, k) == *n {
            Some(r)
        } else {
            None
        }
    }
    if !q.is_positive() {
        return None;
    }
    Some(Q::new(int_root(q.numer(), k)?, int_root(q.denom(), k)?))
}

fn pow_of(base: &Expr, exponent: &Expr) -> Result<Frac, ExprError> {
    let fe = to_frac(exponent)?;
    let fb = to_frac(base)?;
    if let Some(c) = fe.as_constant() {
        if c.is_integer() {
            let k = c.to_integer().to_i64().ok_or(ExprError::DivisionByZero)?;
            return fb.powi(k);
        }
        if fb.is_zero() {
            return if c.is_positive() { Ok(Frac::zero()) } else { Err(ExprError::DivisionByZero) };
        }
        if let Some(b) = fb.as_constant() {
            if let Some(den) = c.denom().to_u32() {
                if let Some(root) = rational_root(&b, den) {
                    let k = c.numer().to_i64().ok_or(ExprError::DivisionByZero)?;
                    return Frac::constant(root).powi(k);
                }
            }
        }
    }
    let l = ln_of(&fb)?;
    exp_of(&fe.mul(&l)?)
}

/// Converts an expression to its reduced fraction.
pub(crate) fn to_frac(e: &Expr) -> Result<Frac, ExprError> {
    Ok(match e.node() {
        Node::Num(q) => Frac::constant(q.clone()),
        Node::Param(_) | Node::Var(_) => Frac::kernel(e.clone()),
        Node::Add(v) => {
            let mut acc = Frac::zero();
            let mut plain = Poly::zero();
            for t in v {
                let f = to_frac(t)?;
                if f.den.is_one() {
                    plain = plain.add(&f.num);
                } else {
                    acc = acc.add(&f)?;
                }
            }
            acc.add(&Frac::from_poly(plain))?
        }
        Node::Mul(v) => {
            let mut acc = Frac::one();
            for t in v {
                acc = acc.mul(&to_frac(t)?)?;
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Node::Pow(b, x) => pow_of(b, x)?,
        Node::Sqrt(a) => pow_of(a, &Expr::rational(1, 2))?,
        Node::Exp(a) => exp_of(&to_frac(a)?)?,
        Node::Ln(a) => ln_of(&to_frac(a)?)?,
        Node::Sin(a) | Node::Tan(a) => {
            let fa = to_frac(a)?;
            if fa.is_zero() {
                Frac::zero()
            } else if matches!(e.node(), Node::Sin(_)) {
                Frac::kernel(Expr::sin(fa.to_expr()))
            } else {
                Frac::kernel(Expr::tan(fa.to_expr()))
            }
        }
        Node::Cos(a) => {
            let fa = to_frac(a)?;
            if fa.is_zero() {
                Frac::one()
            } else {
                Frac::kernel(Expr::cos(fa.to_expr()))
            }
        }
        Node::AntiDeriv(ad) => {
            let mut ad = ad.clone();
            ad.integrand = to_frac(&ad.integrand)?.to_expr();
            ad.upper = to_frac(&ad.upper)?.to_expr();
            Frac::kernel(Expr::antideriv_node(ad))
        }
    })
}

/// Canonical form, or an error for exact division by zero or `ln(0)`.
pub fn try_normalize(e: &Expr) -> Result<Expr, ExprError> {
    Ok(to_frac(e)?.to_expr())
}

/// Canonical form. Idempotent and value preserving. An expression that
/// divides exactly by zero is returned unchanged; use [`try_normalize`] to
/// observe that case.
pub fn normalize(e: &Expr) -> Expr {
    try_normalize(e).unwrap_or_else(|_| e.clone())
}

impl Frac {
    pub fn zero() -> Frac {
        Frac { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Frac {
        Frac { num: Poly::one(), den: Poly::one() }
    }

    pub fn constant(q: Q) -> Frac {
        Frac { num: Poly::constant(q), den: Poly::one() }
    }

    pub fn kernel(k: Kernel) -> Frac {
        Frac { num: Poly::kernel(k), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Frac {
        Frac { num: p, den: Poly::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// Builds a reduced fraction from an arbitrary numerator and denominator.
    pub fn reduce(num: Poly, den: Poly) -> Result<Frac, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Frac::zero());
        }
        if has_extractable(&num) || has_extractable(&den) {
            let n = expand_extractable(&num)?;
            let d = expand_extractable(&den)?;
            return n.div(&d);
        }
        if den.terms.keys().all(|m| m.exp_part().is_some()) {
            // Multiply through by the unit exp(-a) for the smallest argument.
            let a = den
                .terms
                .keys()
                .filter_map(|m| m.exp_part().map(|(_, a)| a.clone()))
                .min()
                .unwrap();
            let neg = arg_frac(&a).neg();
            let unit = Poly::kernel(Expr::exp(neg.to_expr()));
            return Frac::reduce(mul_merge(&num, &unit), mul_merge(&den, &unit));
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        if den.terms.keys().all(|m| m.exp_part().is_some()) {
            return Frac::reduce(num, den);
        }
        let base = Frac::lc_normalized(num, den);
        if base.den.terms.keys().all(|m| m.exp_part().is_none()) {
            return Ok(base);
        }
        Ok(base.canonical_shift())
    }

    fn lc_normalized(num: Poly, den: Poly) -> Frac {
        let lc = den.lc();
        if lc.is_one() {
            Frac { num, den }
        } else {
            let inv = lc.recip();
            Frac { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    /// Among the representations `num·e^(-a) / den·e^(-a)`, with `a` ranging
    /// over the exponential arguments of the denominator, picks the smallest.
    fn canonical_shift(self) -> Frac {
        let mut args: Vec<Expr> = self.den.terms.keys().filter_map(|m| m.exp_part().map(|(_, a)| a.clone())).collect();
        args.sort();
        args.dedup();
        let key = |f: &Frac| -> (Vec<(Mono, Q)>, Vec<(Mono, Q)>) {
            let v = |p: &Poly| p.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect::<Vec<_>>();
            (v(&f.den), v(&f.num))
        };
        let mut best_key = key(&self);
        let mut best = self.clone();
        for a in args {
            let unit = Poly::kernel(Expr::exp(arg_frac(&a).neg().to_expr()));
            let num = mul_merge(&self.num, &unit);
            let den = mul_merge(&self.den, &unit);
            if has_extractable(&num) || has_extractable(&den) {
                continue;
            }
            let g = gcd(&num, &den);
            let (num, den) = if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
            };
            if den.terms.keys().all(|m| m.exp_part().is_some()) {
                continue;
            }
            let cand = Frac::lc_normalized(num, den);
            let k = key(&cand);
            if k < best_key {
                best_key = k;
                best = cand;
            }
        }
        best
    }

    pub fn add(&self, o: &Frac) -> Result<Frac, ExprError> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.den == o.den {
            if self.den.is_one() {
                return Ok(Frac::from_poly(self.num.add(&o.num)));
            }
            return Frac::reduce(self.num.add(&o.num), self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        let d1 = self.den.div_exact(&g).expect("gcd divides");
        let d2 = o.den.div_exact(&g).expect("gcd divides");
        let num = mul_merge(&self.num, &d2).add(&mul_merge(&o.num, &d1));
        let den = mul_merge(&self.den, &d2);
        Frac::reduce(num, den)
    }

    pub fn neg(&self) -> Frac {
        Frac { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &Frac) -> Result<Frac, ExprError> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Frac) -> Result<Frac, ExprError> {
        if self.is_zero() || o.is_zero() {
            return Ok(Frac::zero());
        }
        if self.is_one() {
            return Ok(o.clone());
        }
        if o.is_one() {
            return Ok(self.clone());
        }
        if let Some(c) = self.as_constant() {
            return Ok(Frac { num: o.num.scale(&c), den: o.den.clone() });
        }
        if let Some(c) = o.as_constant() {
            return Ok(Frac { num: self.num.scale(&c), den: self.den.clone() });
        }
        if !(self.den.is_one() && o.den.is_one()) {
            // Cancel across first: gcd(a, d) and gcd(c, b) are far cheaper
            // than the gcd of the full products.
            let (a, b) = cancel(&self.num, &o.den);
            let (c, d) = cancel(&o.num, &self.den);
            return Frac::reduce(mul_merge(&a, &c), mul_merge(&d, &b));
        }
        let num = mul_merge(&self.num, &o.num);
        let den = mul_merge(&self.den, &o.den);
        if self.den.is_one() && o.den.is_one() && !has_extractable(&num) {
            // Product of polynomials: still reduced unless exponentials merged
            // into an all-exponential denominator, which cannot happen here.
            return Ok(Frac { num, den });
        }
        Frac::reduce(num, den)
    }

    pub fn inv(&self) -> Result<Frac, ExprError> {
        Frac::reduce(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &Frac) -> Result<Frac, ExprError> {
        self.mul(&o.inv()?)
    }

    pub fn powi(&self, k: i64) -> Result<Frac, ExprError> {
        if k == 0 {
            return Ok(Frac::one());
        }
        if k < 0 {
            return self.inv()?.powi(-k);
        }
        let mut result = Frac::one();
        let mut base = self.clone();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// True if some kernel mentions `name` freely.
    pub fn depends_on(&self, name: &str) -> bool {
        let check = |p: &Poly| p.kernels().iter().any(|k| k.depends_on(name));
        check(&self.num) || check(&self.den)
    }

    pub fn to_expr(&self) -> Expr {
        if self.den.is_one() {
            return poly_to_expr(&self.num);
        }
        let mut factors = Vec::new();
        if self.num.len() == 1 {
            let (m, c) = self.num.terms.iter().next().unwrap();
            factors.push(mono_to_expr(m, c));
        } else {
            factors.push(poly_to_expr(&self.num));
        }
        if self.den.len() == 1 {
            let (m, c) = self.den.terms.iter().next().unwrap();
            if !c.is_one() {
                factors.push(Expr::q(c.recip()));
            }
            for (k, e) in &m.0 {
                factors.push(Expr::pow(k.clone(), Expr::num(-(*e as i64))));
            }
        } else {
            factors.push(Expr::pow(poly_to_expr(&self.den), Expr::num(-1)));
        }
        Expr::mul(factors)
    }
}

fn sorted_terms(p: &Poly) -> Vec<(&Mono, &Q)> {
    let mut terms: Vec<(&Mono, &Q)> = p.terms.iter().collect();
    terms.sort_by(|a, b| grlex(b.0, a.0).then_with(|| b.0.cmp(a.0)));
    terms
}

pub(crate) fn poly_to_expr(p: &Poly) -> Expr {
    Expr::add(sorted_terms(p).into_iter().map(|(m, c)| mono_to_expr(m, c)).collect())
}

fn mono_to_expr(m: &Mono, c: &Q) -> Expr {
    let mut factors = vec![Expr::q(c.clone())];
    for (k, e) in &m.0 {
        match k.node() {
            Node::Exp(a) => {
                let f = display_exp(a);
                factors.push(if *e == 1 { f } else { Expr::pow(f, Expr::num(*e as i64)) });
            }
            _ => factors.push(Expr::pow(k.clone(), Expr::num(*e as i64))),
        }
    }
    Expr::mul(factors)
}

/// Renders `exp(a)` with logarithmic terms shown as powers: `exp(l*ln(r) - r^2/2)`
/// displays as `r^l*exp(-r^2/2)`.
fn display_exp(a: &Expr) -> Expr {
    let f = arg_frac(a);
    if !f.den.is_one() {
        return Expr::exp(a.clone());
    }
    let mut groups: BTreeMap<Expr, Poly> = BTreeMap::new();
    let mut rest = Poly::zero();
    for (m, c) in &f.num.terms {
        let logs: Vec<usize> = m
            .0
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| matches!(k.node(), Node::Ln(_)))
            .map(|(i, _)| i)
            .collect();
        if logs.len() == 1 && m.0[logs[0]].1 == 1 {
            let Node::Ln(g) = m.0[logs[0]].0.node() else { unreachable!() };
            let mut coeff = m.clone();
            coeff.0.remove(logs[0]);
            groups.entry(g.clone()).or_default().add_term(coeff, c.clone());
        } else {
            rest.add_term(m.clone(), c.clone());
        }
    }
    let mut factors = Vec::new();
    for (g, p) in groups {
        factors.push(Expr::pow(g, poly_to_expr(&p)));
    }
    if !rest.is_zero() {
        factors.push(Expr::exp(poly_to_expr(&rest)));
    }
    Expr::mul(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn n(s: &str) -> Expr {
        normalize(&parse(s).unwrap())
    }

    #[test]
    fn rational_functions_cancel() {
        assert_eq!(n("(x^2-1)/(x-1)"), n("x+1"));
        assert_eq!(n("(x^2-1)/(x-1) - x - 1"), Expr::zero());
        assert_eq!(n("1/x + 1/y - (x+y)/(x*y)"), Expr::zero());
    }

    #[test]
    fn exponentials_merge_and_cancel() {
        assert_eq!(n("exp(x)*exp(-x)"), Expr::one());
        assert_eq!(n("exp(x)^2 - exp(2*x)"), Expr::zero());
        assert_eq!(n("exp(ln(x))"), n("x"));
        assert_eq!(n("sqrt(a)*sqrt(a)"), n("a"));
        assert_eq!(n("ln(exp(x+1))"), n("x+1"));
    }

    #[test]
    fn powers_with_symbolic_exponents() {
        assert_eq!(n("r^(l+2) - r^2*r^l"), Expr::zero());
        assert_eq!(n("r^l*r^(-l)"), Expr::one());
        assert_eq!(n("sqrt(4)"), Expr::num(2));
        assert_eq!(n("(1/9)^(1/2)"), Expr::rational(1, 3));
    }

    #[test]
    fn exp_denominator_is_normalized() {
        let a = n("1/(exp(x)+exp(-x))");
        let b = n("exp(x)/(exp(2*x)+1)");
        assert_eq!(a, b);
    }

    #[test]
    fn normalize_is_idempotent_on_mixed_forms() {
        for s in [
            "r^(l+2)*(r^2-3/2)*exp(-r^2/2)",
            "(-zeta+sqrt(-lambda))/(zeta+sqrt(-lambda))*exp(-2*sqrt(-lambda)*x)",
            "sin(x)/cos(x)+ln(x^2+1)",
            "2/x^2",
        ] {
            let once = n(s);
            assert_eq!(normalize(&once), once, "{s}");
        }
    }

    #[test]
    fn division_by_zero_is_reported() {
        assert_eq!(try_normalize(&parse("1/(x-x)").unwrap()), Err(ExprError::DivisionByZero));
        assert_eq!(try_normalize(&parse("ln(0)").unwrap()), Err(ExprError::LogOfZero));
    }
}
