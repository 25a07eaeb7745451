//! Univariate polynomials in one variable with coefficients in the field of
//! reduced fractions over the remaining kernels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Mono, Poly};
use super::{Expr, ExprError, Frac, Q};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct UPoly {
    /// Coefficients, lowest degree first, no trailing zeros.
    pub c: Vec<Frac>,
}

type R<T> = Result<T, ExprError>;

impl UPoly {
    pub fn zero() -> UPoly {
        UPoly { c: Vec::new() }
    }

    pub fn constant(f: Frac) -> UPoly {
        UPoly::from_coeffs(vec![f])
    }

    pub fn from_coeffs(mut c: Vec<Frac>) -> UPoly {
        while c.last().is_some_and(Frac::is_zero) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn monomial(f: Frac, k: usize) -> UPoly {
        let mut c = vec![Frac::zero(); k];
        c.push(f);
        UPoly::from_coeffs(c)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; zero polynomial reports 0.
    pub fn deg(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lc(&self) -> Frac {
        self.c.last().cloned().unwrap_or_else(Frac::zero)
    }

    /// Splits a polynomial over all kernels by powers of `var`. Fails if a
    /// coefficient still mentions `var`.
    pub fn from_poly(p: &Poly, var: &Expr, name: &str) -> Option<UPoly> {
        let coeffs = p.coeffs_in(var);
        let top = coeffs.keys().next_back().copied().unwrap_or(0) as usize;
        let mut c = vec![Frac::zero(); top + 1];
        for (e, q) in coeffs {
            if q.kernels().iter().any(|k| k.depends_on(name)) {
                return None;
            }
            c[e as usize] = Frac::from_poly(q);
        }
        Some(UPoly::from_coeffs(c))
    }

    pub fn to_frac(&self, var: &Expr) -> R<Frac> {
        let mut acc = Frac::zero();
        for (k, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let xk = Frac::from_poly(Poly::term(Mono::single(var.clone(), k as u32), Q::one()));
            acc = acc.add(&c.mul(&xk)?)?;
        }
        Ok(acc)
    }

    pub fn add(&self, o: &UPoly) -> R<UPoly> {
        let n = self.c.len().max(o.c.len());
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.c.get(i);
            let b = o.c.get(i);
            c.push(match (a, b) {
                (Some(a), Some(b)) => a.add(b)?,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => Frac::zero(),
            });
        }
        Ok(UPoly::from_coeffs(c))
    }

    pub fn neg(&self) -> UPoly {
        UPoly { c: self.c.iter().map(Frac::neg).collect() }
    }

    pub fn sub(&self, o: &UPoly) -> R<UPoly> {
        self.add(&o.neg())
    }

    pub fn scale(&self, f: &Frac) -> R<UPoly> {
        Ok(UPoly::from_coeffs(self.c.iter().map(|c| c.mul(f)).collect::<R<Vec<_>>>()?))
    }

    pub fn mul(&self, o: &UPoly) -> R<UPoly> {
        if self.is_zero() || o.is_zero() {
            return Ok(UPoly::zero());
        }
        let mut c = vec![Frac::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                c[i + j] = c[i + j].add(&a.mul(b)?)?;
            }
        }
        Ok(UPoly::from_coeffs(c))
    }

    pub fn pow(&self, k: usize) -> R<UPoly> {
        let mut out = UPoly::constant(Frac::one());
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn derivative(&self) -> R<UPoly> {
        let mut c = Vec::new();
        for (k, f) in self.c.iter().enumerate().skip(1) {
            c.push(f.mul(&Frac::constant(Q::from_integer(BigInt::from(k))))?);
        }
        Ok(UPoly::from_coeffs(c))
    }

    pub fn divrem(&self, d: &UPoly) -> R<(UPoly, UPoly)> {
        if d.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let inv = d.lc().inv()?;
        let mut r = self.clone();
        let mut q = vec![Frac::zero(); self.c.len().saturating_sub(d.c.len()) + 1];
        while !r.is_zero() && r.c.len() >= d.c.len() {
            let shift = r.c.len() - d.c.len();
            let f = r.lc().mul(&inv)?;
            q[shift] = f.clone();
            let sub = UPoly::monomial(f, shift).mul(d)?;
            let mut next = r.sub(&sub)?;
            // The leading coefficient cancels exactly; drop it even if
            // normalization left a representation artifact.
            if next.c.len() == r.c.len() {
                next.c.pop();
                next = UPoly::from_coeffs(next.c);
            }
            r = next;
        }
        Ok((UPoly::from_coeffs(q), r))
    }

    pub fn monic(&self) -> R<UPoly> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        self.scale(&self.lc().inv()?)
    }

    pub fn gcd(&self, o: &UPoly) -> R<UPoly> {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b)?;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `(g, s, t)` with `s*self + t*o = g`, `g` monic.
    pub fn ext_gcd(&self, o: &UPoly) -> R<(UPoly, UPoly, UPoly)> {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (UPoly::constant(Frac::one()), UPoly::zero());
        let (mut t0, mut t1) = (UPoly::zero(), UPoly::constant(Frac::one()));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1)?;
            let s2 = s0.sub(&q.mul(&s1)?)?;
            let t2 = t0.sub(&q.mul(&t1)?)?;
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
            t0 = t1;
            t1 = t2;
        }
        let inv = r0.lc().inv()?;
        Ok((r0.scale(&inv)?, s0.scale(&inv)?, t0.scale(&inv)?))
    }

    /// Yun square-free decomposition of a monic polynomial: `self = Π f_i^i`,
    /// returned as `[f_1, f_2, ...]`.
    pub fn squarefree(&self) -> R<Vec<UPoly>> {
        let a = self.monic()?;
        let b = a.derivative()?;
        let c = a.gcd(&b)?;
        let mut w = a.divrem(&c)?.0;
        let y = b.divrem(&c)?.0;
        let mut z = y.sub(&w.derivative()?)?;
        let mut out = Vec::new();
        while w.deg() > 0 {
            let g = w.gcd(&z)?;
            w = w.divrem(&g)?.0;
            let y = z.divrem(&g)?.0;
            z = y.sub(&w.derivative()?)?;
            out.push(g);
        }
        Ok(out)
    }

    /// Rational roots when all coefficients are rational constants of modest size.
    pub fn rational_roots(&self) -> Option<Vec<Q>> {
        let qs: Vec<Q> = self.c.iter().map(Frac::as_constant).collect::<Option<_>>()?;
        let lcm = qs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let ints: Vec<BigInt> = qs.iter().map(|q| (q * Q::from_integer(lcm.clone())).to_integer()).collect();
        let low = ints.iter().position(|v| !v.is_zero())?;
        let mut roots = Vec::new();
        if low > 0 {
            roots.push(Q::zero());
        }
        let a0 = ints[low].abs().to_u64()?;
        let an = ints.last()?.abs().to_u64()?;
        if a0 > 1_000_000 || an > 1_000_000 {
            return None;
        }
        let divisors = |n: u64| (1..=n).filter(move |d| n % d == 0);
        for p in divisors(a0) {
            for q in divisors(an) {
                for sign in [1i64, -1] {
                    let cand = Q::new(BigInt::from(sign) * BigInt::from(p), BigInt::from(q));
                    if roots.contains(&cand) {
                        continue;
                    }
                    let mut acc = Q::zero();
                    for c in qs.iter().rev() {
                        acc = acc * &cand + c;
                    }
                    if acc.is_zero() {
                        roots.push(cand);
                    }
                }
            }
        }
        Some(roots)
    }
}
