//! Sparse multivariate polynomials over Q in opaque kernels.
//!
//! Kernels are expressions (variables, parameters, logarithms, exponentials,
//! trigonometric calls, formal antiderivatives). Multiplication here is the
//! free one: two exponential kernels in a monomial stay separate. Merging of
//! exponentials happens one level up in `frac`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::{Expr, Node, Q};

pub(crate) type Kernel = Expr;

/// Monomial: kernels with positive exponents, sorted by kernel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Mono(pub Vec<(Kernel, u32)>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn single(k: Kernel, e: u32) -> Mono {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(k, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn exponent(&self, k: &Kernel) -> u32 {
        self.0
            .binary_search_by(|(kk, _)| kk.cmp(k))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// `self / other` if every exponent of `other` fits.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (k, e) in &self.0 {
            if j < other.0.len() && &other.0[j].0 == k {
                let d = other.0[j].1;
                if d > *e {
                    return None;
                }
                if d < *e {
                    out.push((k.clone(), e - d));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *k {
                return None;
            } else {
                out.push((k.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        for (k, e) in &self.0 {
            let f = other.exponent(k);
            if f > 0 {
                out.push((k.clone(), (*e).min(f)));
            }
        }
        Mono(out)
    }

    pub fn without(&self, k: &Kernel) -> (Mono, u32) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(kk, ee)| {
                if kk == k {
                    e = *ee;
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        (Mono(rest), e)
    }

    /// The exponential kernel argument of this monomial, if any.
    pub fn exp_part(&self) -> Option<(usize, &Expr)> {
        self.0.iter().enumerate().find_map(|(i, (k, _))| match k.node() {
            Node::Exp(a) => Some((i, a)),
            _ => None,
        })
    }
}

/// Graded order: total degree, then exponents compared from the largest kernel down.
pub(crate) fn grlex(a: &Mono, b: &Mono) -> Ordering {
    let da = a.degree();
    let db = b.degree();
    if da != db {
        return da.cmp(&db);
    }
    let (mut i, mut j) = (a.0.len(), b.0.len());
    while i > 0 && j > 0 {
        let (ka, ea) = &a.0[i - 1];
        let (kb, eb) = &b.0[j - 1];
        match ka.cmp(kb) {
            Ordering::Greater => return Ordering::Greater,
            Ordering::Less => return Ordering::Less,
            Ordering::Equal => {
                if ea != eb {
                    return ea.cmp(eb);
                }
                i -= 1;
                j -= 1;
            }
        }
    }
    (i > 0).cmp(&(j > 0))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn kernel(k: Kernel) -> Poly {
        Poly::term(Mono::single(k, 1), Q::one())
    }

    pub fn term(m: Mono, c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Mono::one()).is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(mm, cc)| (mm.mul(m), cc * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn kernels(&self) -> BTreeSet<Kernel> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (k, _) in &m.0 {
                out.insert(k.clone());
            }
        }
        out
    }

    pub fn degree_in(&self, k: &Kernel) -> u32 {
        self.terms.keys().map(|m| m.exponent(k)).max().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().max_by(|a, b| grlex(a.0, b.0))
    }

    pub fn lc(&self) -> Q {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::zero)
    }

    /// Scalar multiple with graded-leading coefficient one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) if !c.is_one() => {
                let inv = c.recip();
                self.scale(&inv)
            }
            _ => self.clone(),
        }
    }

    /// Coefficients with respect to kernel `k`, by exponent.
    pub fn coeffs_in(&self, k: &Kernel) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(k);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out
    }

    /// Exact quotient, or `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if divisor.len() == 1 {
            let (dm, dc) = divisor.terms.iter().next().unwrap();
            let inv = dc.recip();
            let mut out = Poly::zero();
            for (m, c) in &self.terms {
                out.terms.insert(m.div(dm)?, c * &inv);
            }
            return Some(out);
        }
        let (lm, lc) = {
            let (m, c) = divisor.leading().unwrap();
            (m.clone(), c.clone())
        };
        let inv = lc.recip();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(&lm)?;
            let qc = c * &inv;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    fn mono_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let mut g = match it.next() {
            Some(m) => m.clone(),
            None => return Mono::one(),
        };
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }
}

/// Greatest common divisor, normalized monic. Exponential kernels are treated
/// as independent indeterminates.
pub(crate) fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if a.len() == 1 || b.len() == 1 {
        let g = a.mono_content().gcd(&b.mono_content());
        return Poly::term(g, Q::one());
    }
    // Pull out monomial contents first; they are cheap and common.
    let ma = a.mono_content();
    let mb = b.mono_content();
    let mg = ma.gcd(&mb);
    let (a, b) = if ma.is_one() && mb.is_one() {
        (a.clone(), b.clone())
    } else {
        (
            a.div_exact(&Poly::term(ma, Q::one())).unwrap(),
            b.div_exact(&Poly::term(mb, Q::one())).unwrap(),
        )
    };
    let g = gcd_primitive(&a, &b);
    g.mul_term(&mg, &Q::one()).monic()
}

fn gcd_primitive(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ka = a.kernels();
    let kb = b.kernels();
    let common: Vec<&Kernel> = ka.intersection(&kb).collect();
    if common.is_empty() {
        return Poly::one();
    }
    let bounds: Vec<Option<usize>> = common.iter().map(|v| degree_bound(a, b, v)).collect();
    if bounds.iter().all(|d| *d == Some(0)) {
        return Poly::one();
    }
    for (v, d) in common.iter().zip(&bounds) {
        match *d {
            // The gcd is free of v, so it is the gcd of the contents in v.
            Some(0) => return gcd(&content(a, v), &content(b, v)),
            Some(d) if d == b.degree_in(v) as usize => {
                if a.div_exact(b).is_some() {
                    return b.monic();
                }
            }
            Some(d) if d == a.degree_in(v) as usize => {
                if b.div_exact(a).is_some() {
                    return a.monic();
                }
            }
            _ => {}
        }
    }
    // A kernel present in only one argument must divide out through contents.
    if let Some(k) = ka.symmetric_difference(&kb).next() {
        if ka.contains(k) {
            return gcd(&content(a, k), b);
        }
        return gcd(a, &content(b, k));
    }
    let v = common
        .iter()
        .min_by_key(|k| (a.degree_in(k).max(b.degree_in(k)), (**k).clone()))
        .copied()
        .unwrap()
        .clone();
    let ca = content(a, &v);
    let cb = content(b, &v);
    let c = gcd(&ca, &cb);
    let pa = integer_primitive(&a.div_exact(&ca).expect("content divides"));
    let pb = integer_primitive(&b.div_exact(&cb).expect("content divides"));
    let g = prs(pa, pb, &v);
    c.mul(&g).monic()
}

/// Gcd of the coefficients with respect to `k`.
fn content(p: &Poly, k: &Kernel) -> Poly {
    let coeffs = p.coeffs_in(k);
    let mut it = coeffs.into_values();
    let mut g = it.next().unwrap_or_default().monic();
    for c in it {
        if g.is_constant() {
            return Poly::one();
        }
        g = gcd(&g, &c);
    }
    g
}

fn primitive_part(p: &Poly, k: &Kernel) -> Poly {
    let c = content(p, k);
    p.div_exact(&c).expect("content divides")
}

fn prem(a: &Poly, b: &Poly, k: &Kernel) -> Poly {
    let db = b.degree_in(k);
    let bc = b.coeffs_in(k);
    let lcb = bc.get(&db).cloned().unwrap_or_default();
    let mut r = a.clone();
    let mut steps = (a.degree_in(k) + 1).saturating_sub(db);
    while !r.is_zero() {
        let dr = r.degree_in(k);
        if dr < db {
            break;
        }
        let rc = r.coeffs_in(k);
        let lcr = rc.get(&dr).cloned().unwrap_or_default();
        let shift = Mono::single(k.clone(), dr - db);
        r = r.mul(&lcb).sub(&lcr.mul(b).mul_term(&shift, &Q::one()));
        steps = steps.saturating_sub(1);
    }
    if steps > 0 {
        r = r.mul(&lcb.pow(steps));
    }
    r
}

fn prs(a: Poly, b: Poly, k: &Kernel) -> Poly {
    let (mut a, mut b) = if a.degree_in(k) >= b.degree_in(k) { (a, b) } else { (b, a) };
    loop {
        if b.is_zero() {
            return primitive_part(&a, k);
        }
        if b.degree_in(k) == 0 {
            return Poly::one();
        }
        let r = prem(&a, &b, k);
        if r.is_zero() {
            return primitive_part(&b, k).monic();
        }
        a = b;
        b = integer_primitive(&primitive_part(&r, k));
    }
}

/// `p` scaled to integer coefficients with gcd 1.
fn integer_primitive(p: &Poly) -> Poly {
    use num_integer::Integer;
    let mut num = num_bigint::BigInt::zero();
    let mut den = num_bigint::BigInt::one();
    for c in p.terms.values() {
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    if num.is_zero() || (num.is_one() && den.is_one()) {
        return p.clone();
    }
    p.scale(&Q::new(den, num))
}

/// Mersenne prime `2^61 - 1`; images are taken in GF(p).
const P: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, P - 2)
}

fn q_mod(q: &Q) -> Option<u64> {
    let m = num_bigint::BigInt::from(P);
    let to_u64 = |b: num_bigint::BigInt| -> u64 {
        let r = ((b % &m) + &m) % &m;
        r.to_u64_digits().1.first().copied().unwrap_or(0)
    };
    let d = to_u64(q.denom().clone());
    (d != 0).then(|| mul_mod(to_u64(q.numer().clone()), inv_mod(d)))
}

fn kernel_value(k: &Kernel, salt: u64) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    salt.hash(&mut h);
    k.hash(&mut h);
    2 + h.finish() % (P - 3)
}

/// Coefficients in `v`, lowest degree first, with every other kernel
/// evaluated. `None` if a denominator vanishes mod p.
fn image(p: &Poly, v: &Kernel, salt: u64) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut t = q_mod(c)?;
        let mut deg = 0;
        for (k, e) in &m.0 {
            if k == v {
                deg = *e as usize;
            } else {
                t = mul_mod(t, pow_mod(kernel_value(k, salt), *e as u64));
            }
        }
        out[deg] = (out[deg] + t) % P;
    }
    Some(out)
}

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn rem_mod(mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    let lb = inv_mod(*b.last().expect("nonzero divisor"));
    while a.len() >= b.len() {
        let q = mul_mod(*a.last().expect("nonempty"), lb);
        let shift = a.len() - b.len();
        for (i, bi) in b.iter().enumerate() {
            a[shift + i] = (a[shift + i] + P - mul_mod(q, *bi)) % P;
        }
        a = trim(a);
    }
    a
}

/// Degree of `gcd(a, b)` in GF(p)[v].
fn gcd_degree_mod(a: Vec<u64>, b: Vec<u64>) -> usize {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let r = rem_mod(a, &b);
        a = b;
        b = r;
    }
    a.len().saturating_sub(1)
}

/// Upper bound on the degree in `v` of `gcd(a, b)`, from univariate images
/// whose leading coefficients do not vanish. `None` if no image qualifies.
fn degree_bound(a: &Poly, b: &Poly, v: &Kernel) -> Option<usize> {
    let (da, db) = (a.degree_in(v) as usize, b.degree_in(v) as usize);
    (0..2u64)
        .filter_map(|salt| match (image(a, v, salt), image(b, v, salt)) {
            (Some(ia), Some(ib)) if ia[da] != 0 && ib[db] != 0 => Some(gcd_degree_mod(ia, ib)),
            _ => None,
        })
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q_int;

    fn x() -> Kernel {
        Expr::var("x")
    }
    fn y() -> Kernel {
        Expr::param("y")
    }
    fn p(terms: &[(i64, u32, u32)]) -> Poly {
        let mut out = Poly::zero();
        for &(c, ex, ey) in terms {
            let m = Mono::single(x(), ex).mul(&Mono::single(y(), ey));
            out.add_term(m, q_int(c));
        }
        out
    }

    #[test]
    fn gcd_of_products_recovers_common_factor() {
        let f = p(&[(1, 1, 0), (1, 0, 1)]); // x + y
        let g = p(&[(1, 1, 0), (-1, 0, 0)]); // x - 1
        let h = p(&[(1, 2, 0), (1, 0, 2), (3, 0, 0)]); // x^2 + y^2 + 3
        let a = f.mul(&g);
        let b = f.mul(&h);
        assert_eq!(gcd(&a, &b), f.monic());
        assert_eq!(gcd(&g, &h), Poly::one());
    }

    #[test]
    fn exact_division_round_trips() {
        let f = p(&[(2, 2, 1), (1, 0, 3), (-5, 1, 0)]);
        let g = p(&[(1, 1, 1), (7, 0, 0)]);
        let prod = f.mul(&g);
        assert_eq!(prod.div_exact(&g), Some(f.clone()));
        assert_eq!(f.div_exact(&g), None);
    }
}
