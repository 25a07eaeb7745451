//! Complex floating-point evaluation.
//!
//! Every evaluation also produces a magnitude scale: a bound, up to a factor
//! of machine epsilon, on the rounding error accumulated while computing the
//! value. Zero tests compare values against this scale rather than against
//! the value alone, so that exact cancellations of large terms are recognized.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cell::RefCell;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use super::{AntiDeriv, Expr, ExprError, Node, Q};

pub type C64 = Complex64;

/// Assignment of complex values to free names.
pub type Point = BTreeMap<String, C64>;

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_ABS_TOL: f64 = 1e-13;
const QUAD_MAX_INTERVALS: usize = 400;
const POLE_PROBES: usize = 64;
const POLE_RATIO: f64 = 1e12;

struct Env<'a> {
    point: &'a Point,
    local: Vec<(String, C64)>,
    /// Relative margin for rejecting near-singular divisions; `None` disables it.
    guard: Option<f64>,
    memo: RefCell<HashMap<(Expr, u64, u64), (C64, f64)>>,
}

impl Env<'_> {
    fn lookup(&self, name: &str) -> Result<C64, ExprError> {
        if let Some((_, v)) = self.local.iter().rev().find(|(n, _)| n == name) {
            return Ok(*v);
        }
        self.point.get(name).copied().ok_or_else(|| ExprError::UnboundName(name.to_string()))
    }

    fn check_divisor(&self, v: C64, scale: f64, what: &str) -> Result<(), ExprError> {
        if v.is_zero() || !v.is_finite() {
            return Err(ExprError::DivisionByZero);
        }
        if let Some(m) = self.guard {
            if v.norm() < m * scale {
                return Err(ExprError::SingularPoint(format!("{what} nearly vanishes")));
            }
        }
        Ok(())
    }
}

pub(crate) fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Evaluates `e` at `point`. Fails on exact division by zero, `ln(0)`,
/// unbound names and non-convergent quadrature.
pub fn eval_at(e: &Expr, point: &Point) -> Result<C64, ExprError> {
    let env = Env { point, local: Vec::new(), guard: None, memo: RefCell::new(HashMap::new()) };
    let mut env = env;
    let (v, _) = ev(e, &mut env)?;
    if !v.is_finite() {
        return Err(ExprError::SingularPoint("non-finite value".into()));
    }
    Ok(v)
}

/// Evaluates `e` at `point` and returns `(value, scale)`. Divisions by, and
/// logarithms of, quantities smaller than `margin` times their own scale are
/// rejected as singular points.
pub fn eval_guarded(e: &Expr, point: &Point, margin: f64) -> Result<(C64, f64), ExprError> {
    let mut env = Env { point, local: Vec::new(), guard: Some(margin), memo: RefCell::new(HashMap::new()) };
    let (v, s) = ev(e, &mut env)?;
    if !v.is_finite() || !s.is_finite() {
        return Err(ExprError::SingularPoint("non-finite value".into()));
    }
    Ok((v, s))
}

fn powi(b: C64, k: i64) -> C64 {
    let mut result = C64::new(1.0, 0.0);
    let mut base = b;
    let mut n = k.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    if k < 0 {
        result.inv()
    } else {
        result
    }
}

fn ev(e: &Expr, env: &mut Env) -> Result<(C64, f64), ExprError> {
    Ok(match e.node() {
        Node::Num(q) => {
            let v = C64::new(q_to_f64(q), 0.0);
            (v, v.norm())
        }
        Node::Param(n) | Node::Var(n) => {
            let v = env.lookup(n)?;
            (v, v.norm())
        }
        Node::Add(terms) => {
            let mut v = C64::zero();
            let mut s = 0.0;
            for t in terms {
                let (tv, ts) = ev(t, env)?;
                v += tv;
                s += ts;
            }
            (v, s)
        }
        Node::Mul(factors) => {
            let mut v = C64::new(1.0, 0.0);
            let mut s = 1.0;
            for f in factors {
                let (fv, fs) = ev(f, env)?;
                v *= fv;
                s *= fs;
            }
            (v, s)
        }
        Node::Pow(b, k) => {
            let (bv, bs) = ev(b, env)?;
            if let Some(q) = k.as_rational().filter(|q| q.is_integer()) {
                let k = q.numer().to_i64().unwrap_or(i64::MAX);
                if k >= 0 {
                    (powi(bv, k), bs.powi(k.min(i32::MAX as i64) as i32))
                } else {
                    env.check_divisor(bv, bs, "denominator")?;
                    let v = powi(bv, k);
                    (v, v.norm() * (k.unsigned_abs() as f64) * bs / bv.norm())
                }
            } else {
                let (kv, ks) = ev(k, env)?;
                if bv.is_zero() {
                    if kv.re > 0.0 {
                        (C64::zero(), 0.0)
                    } else {
                        return Err(ExprError::DivisionByZero);
                    }
                } else {
                    env.check_divisor(bv, bs, "power base")?;
                    let l = bv.ln();
                    let v = (kv * l).exp();
                    (v, v.norm() * (1.0 + kv.norm() * bs / bv.norm() + ks * l.norm()))
                }
            }
        }
        Node::Exp(a) => {
            let (av, as_) = ev(a, env)?;
            let v = av.exp();
            (v, v.norm() * (1.0 + as_))
        }
        Node::Ln(a) => {
            let (av, as_) = ev(a, env)?;
            if av.is_zero() {
                return Err(ExprError::LogOfZero);
            }
            env.check_divisor(av, as_, "logarithm argument")?;
            let v = av.ln();
            (v, v.norm() + as_ / av.norm())
        }
        Node::Sqrt(a) => {
            let (av, as_) = ev(a, env)?;
            let v = av.sqrt();
            if av.is_zero() {
                (v, 0.0)
            } else {
                (v, v.norm() * (1.0 + 0.5 * as_ / av.norm()))
            }
        }
        Node::Sin(a) => {
            let (av, as_) = ev(a, env)?;
            let v = av.sin();
            (v, v.norm() + av.cos().norm() * as_)
        }
        Node::Cos(a) => {
            let (av, as_) = ev(a, env)?;
            let v = av.cos();
            (v, v.norm() + av.sin().norm() * as_)
        }
        Node::Tan(a) => {
            let (av, as_) = ev(a, env)?;
            let c = av.cos();
            env.check_divisor(c, c.norm() + av.sin().norm() * as_, "cosine")?;
            let v = av.sin() / c;
            (v, v.norm() + (1.0 + v.norm_sqr()) * as_)
        }
        Node::AntiDeriv(ad) => {
            let (upper, _) = ev(&ad.upper, env)?;
            let key = (e.clone(), upper.re.to_bits(), upper.im.to_bits());
            if env.local.is_empty() {
                if let Some(r) = env.memo.borrow().get(&key) {
                    return Ok(*r);
                }
            }
            let r = integrate_path(ad, upper, env)?;
            if env.local.is_empty() {
                env.memo.borrow_mut().insert(key, r);
            }
            r
        }
    })
}

// Gauss-Kronrod 15/7 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn integrate_path(ad: &AntiDeriv, upper: C64, env: &mut Env) -> Result<(C64, f64), ExprError> {
    let base = C64::new(q_to_f64(&ad.base_re), q_to_f64(&ad.base_im));
    let span = upper - base;
    if span.is_zero() {
        return Ok((C64::zero(), 0.0));
    }
    let guard = env.guard.take();
    let result = integrate_segment(ad, base, span, env);
    env.guard = guard;
    result
}

fn integrate_segment(ad: &AntiDeriv, base: C64, span: C64, env: &mut Env) -> Result<(C64, f64), ExprError> {
    let f = |s: f64, env: &mut Env| -> Result<C64, ExprError> {
        env.local.push((ad.var.clone(), base + span * s));
        let r = ev(&ad.integrand, env);
        env.local.pop();
        let (v, _) = r.map_err(|e| match e {
            ExprError::DivisionByZero | ExprError::LogOfZero | ExprError::SingularPoint(_) => ExprError::PoleOnPath,
            other => other,
        })?;
        if !v.is_finite() {
            return Err(ExprError::PoleOnPath);
        }
        Ok(v * span)
    };

    let mut mags = Vec::with_capacity(POLE_PROBES);
    for i in 0..POLE_PROBES {
        let s = (i as f64 + 0.5) / POLE_PROBES as f64;
        mags.push(f(s, env)?.norm());
    }
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    mags.sort_by(f64::total_cmp);
    let median = mags[POLE_PROBES / 2];
    if peak > POLE_RATIO * median.max(f64::MIN_POSITIVE) {
        return Err(ExprError::PoleOnPath);
    }

    let rule = |a: f64, b: f64, env: &mut Env| -> Result<Segment, ExprError> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c, env)?;
        let mut kron = fc * WGK[7];
        let mut gauss = fc * WG[3];
        for j in 0..7 {
            let x = h * XGK[j];
            let pair = f(c - x, env)? + f(c + x, env)?;
            kron += pair * WGK[j];
            if j % 2 == 1 {
                gauss += pair * WG[j / 2];
            }
        }
        let value = kron * h;
        let err = ((kron - gauss) * h).norm();
        Ok(Segment { a, b, value, err })
    };

    let mut heap = BinaryHeap::new();
    let first = rule(0.0, 1.0, env)?;
    let mut total = first.value;
    let mut total_err = first.err;
    heap.push(first);
    while total_err > QUAD_ABS_TOL.max(QUAD_REL_TOL * total.norm()) {
        if heap.len() >= QUAD_MAX_INTERVALS {
            return Err(ExprError::QuadratureNonConvergent(total_err));
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        let left = rule(worst.a, mid, env)?;
        let right = rule(mid, worst.b, env)?;
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    let scale = total.norm() + peak;
    Ok((total, scale))
}
