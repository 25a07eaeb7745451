//! Exact symbolic expressions over the rationals.
//!
//! An [`Expr`] is an immutable, cheaply clonable tree. Independent variables are
//! `x`/`r` and `zeta`; every other identifier is a parameter. Structural
//! equality is exact; mathematical equality goes through [`normalize`] or
//! [`is_zero`].

mod diff;
mod error;
mod eval;
mod frac;
mod inspect;
mod integrate;
mod parse;
mod poly;
mod print;
mod upoly;
mod zero;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use diff::{differentiate, substitute, substitute_raw, substitute_square};
pub use error::ExprError;
pub use eval::{eval_at, eval_guarded, Point, C64};
pub use frac::{normalize, try_normalize};
pub use inspect::{degree_in, has_root_in, numer_denom, poly_coeffs, total_degree, transcendental_kernels};
pub use integrate::{antiderivative, antiderivative_with_base, closed_form_antiderivative};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use zero::{is_zero, is_zero_with, Sampler, ZeroVerdict};

pub(crate) use frac::Frac;

/// Exact rational number.
pub type Q = BigRational;

/// Name of the Riccati dependent variable.
pub const ZETA: &str = "zeta";

/// Returns true for names the parser treats as variables rather than parameters.
pub fn is_variable_name(name: &str) -> bool {
    matches!(name, "x" | "r" | ZETA)
}

/// Immutable expression handle. Clones share structure.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

/// Expression node. Subtraction and division are encoded with `Mul(-1, ..)`
/// and negative powers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Num(Q),
    Param(String),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Exp(Expr),
    Ln(Expr),
    Sqrt(Expr),
    Sin(Expr),
    Cos(Expr),
    Tan(Expr),
    AntiDeriv(AntiDeriv),
}

/// Formal antiderivative `∫_{base}^{upper} integrand d(var)`.
///
/// `var` is bound inside `integrand`. The upper limit is `Var(var)` unless a
/// substitution replaced it. The base point is a Gaussian rational so that the
/// straight integration path can avoid real singularities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AntiDeriv {
    pub var: String,
    pub integrand: Expr,
    pub base_re: Q,
    pub base_im: Q,
    pub upper: Expr,
}

pub(crate) fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub(crate) fn q_frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn make(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn num(n: i64) -> Expr {
        Expr::make(Node::Num(q_int(n)))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        Expr::make(Node::Num(q_frac(p, q)))
    }

    pub fn q(value: Q) -> Expr {
        Expr::make(Node::Num(value))
    }

    pub fn zero() -> Expr {
        Expr::num(0)
    }

    pub fn one() -> Expr {
        Expr::num(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::make(Node::Var(name.to_string()))
    }

    pub fn param(name: &str) -> Expr {
        Expr::make(Node::Param(name.to_string()))
    }

    /// `Var` for variable names, `Param` otherwise.
    pub fn symbol(name: &str) -> Expr {
        if is_variable_name(name) {
            Expr::var(name)
        } else {
            Expr::param(name)
        }
    }

    pub fn zeta() -> Expr {
        Expr::var(ZETA)
    }

    /// Flattening sum with numeric folding.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(terms.len());
        let mut constant = Q::zero();
        for t in terms {
            match t.node() {
                Node::Num(q) => constant += q,
                Node::Add(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Num(q) => constant += q,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if !constant.is_zero() {
            out.push(Expr::q(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::make(Node::Add(out)),
        }
    }

    /// Flattening product with numeric folding.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(factors.len());
        let mut coeff = Q::one();
        for f in factors {
            match f.node() {
                Node::Num(q) => coeff *= q,
                Node::Mul(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Num(q) => coeff *= q,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if !coeff.is_one() {
            out.insert(0, Expr::q(coeff));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::make(Node::Mul(out)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if let Node::Num(e) = exponent.node() {
            if e.is_zero() {
                return Expr::one();
            }
            if e.is_one() {
                return base;
            }
            if let Node::Num(b) = base.node() {
                if e.is_integer() && !(b.is_zero() && e.is_negative()) {
                    if let Some(k) = num_traits::ToPrimitive::to_i32(e.numer()) {
                        return Expr::q(num_traits::pow::Pow::pow(b, k));
                    }
                }
            }
        }
        Expr::make(Node::Pow(base, exponent))
    }

    pub fn powi(self, k: i64) -> Expr {
        Expr::pow(self, Expr::num(k))
    }

    pub fn recip(self) -> Expr {
        Expr::pow(self, Expr::num(-1))
    }

    pub fn exp(self) -> Expr {
        Expr::make(Node::Exp(self))
    }

    pub fn ln(self) -> Expr {
        Expr::make(Node::Ln(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::make(Node::Sqrt(self))
    }

    pub fn sin(self) -> Expr {
        Expr::make(Node::Sin(self))
    }

    pub fn cos(self) -> Expr {
        Expr::make(Node::Cos(self))
    }

    pub fn tan(self) -> Expr {
        Expr::make(Node::Tan(self))
    }

    /// Formal antiderivative with upper limit `Var(var)`.
    pub fn antideriv(var: &str, integrand: Expr, base_re: Q, base_im: Q) -> Expr {
        Expr::make(Node::AntiDeriv(AntiDeriv {
            var: var.to_string(),
            integrand,
            base_re,
            base_im,
            upper: Expr::var(var),
        }))
    }

    pub(crate) fn antideriv_node(a: AntiDeriv) -> Expr {
        Expr::make(Node::AntiDeriv(a))
    }

    pub fn as_rational(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_rational()
            .filter(|q| q.is_integer())
            .and_then(|q| num_traits::ToPrimitive::to_i64(q.numer()))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }

    /// Free variable and parameter names. The bound variable of a formal
    /// antiderivative is not free inside its integrand.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out, &mut Vec::new());
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>, bound: &mut Vec<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Param(n) | Node::Var(n) => {
                if !bound.contains(n) {
                    out.insert(n.clone());
                }
            }
            Node::Add(v) | Node::Mul(v) => v.iter().for_each(|e| e.collect_names(out, bound)),
            Node::Pow(a, b) => {
                a.collect_names(out, bound);
                b.collect_names(out, bound);
            }
            Node::Exp(a)
            | Node::Ln(a)
            | Node::Sqrt(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Tan(a) => a.collect_names(out, bound),
            Node::AntiDeriv(ad) => {
                bound.push(ad.var.clone());
                ad.integrand.collect_names(out, bound);
                bound.pop();
                ad.upper.collect_names(out, bound);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.free_names().contains(name)
    }

    /// True if the tree contains a formal antiderivative.
    pub fn has_antideriv(&self) -> bool {
        self.any_node(&|n| matches!(n, Node::AntiDeriv(_)))
    }

    pub(crate) fn any_node(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        if pred(self.node()) {
            return true;
        }
        match self.node() {
            Node::Num(_) | Node::Param(_) | Node::Var(_) => false,
            Node::Add(v) | Node::Mul(v) => v.iter().any(|e| e.any_node(pred)),
            Node::Pow(a, b) => a.any_node(pred) || b.any_node(pred),
            Node::Exp(a)
            | Node::Ln(a)
            | Node::Sqrt(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Tan(a) => a.any_node(pred),
            Node::AntiDeriv(ad) => ad.integrand.any_node(pred) || ad.upper.any_node(pred),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Num(_) | Node::Param(_) | Node::Var(_) => 0,
            Node::Add(v) | Node::Mul(v) => v.iter().map(Expr::size).sum(),
            Node::Pow(a, b) => a.size() + b.size(),
            Node::Exp(a)
            | Node::Ln(a)
            | Node::Sqrt(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Tan(a) => a.size(),
            Node::AntiDeriv(ad) => ad.integrand.size() + ad.upper.size(),
        }
    }

    /// Shorthand for `normalize(self)`.
    pub fn normalized(&self) -> Expr {
        normalize(self)
    }

    /// Shorthand for `differentiate(self, var)`.
    pub fn d(&self, var: &str) -> Expr {
        differentiate(self, var)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::num(n)
    }
}

impl From<Q> for Expr {
    fn from(q: Q) -> Expr {
        Expr::q(q)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl ops::$trait<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::num(rhs))
            }
        }
        impl ops::$trait<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::num(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, Expr::mul(vec![Expr::num(-1), b])]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::num(-1), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}
