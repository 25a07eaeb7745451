//! Structural queries on normal forms: numerator/denominator splits,
//! polynomial coefficients, degrees and kernel classification.

use super::frac::{poly_to_expr, to_frac};
use super::poly::{Mono, Poly};
use super::{Expr, ExprError, Node};

/// Splits the normal form into `(numerator, denominator)`.
pub fn numer_denom(e: &Expr) -> Result<(Expr, Expr), ExprError> {
    let f = to_frac(e)?;
    Ok((poly_to_expr(&f.num), poly_to_expr(&f.den)))
}

fn is_var_kernel(k: &Expr, name: &str) -> bool {
    matches!(k.node(), Node::Var(v) | Node::Param(v) if v == name)
}

/// Coefficients `[c_0, c_1, ...]` of `e` as a polynomial in `var`, or `None`
/// when `e` is not polynomial in `var`. Coefficients are normalized and may
/// depend on other names.
pub fn poly_coeffs(e: &Expr, var: &str) -> Option<Vec<Expr>> {
    let f = to_frac(e).ok()?;
    if f.den.kernels().iter().any(|k| k.depends_on(var)) {
        return None;
    }
    let mut by_degree: Vec<Poly> = Vec::new();
    for (m, c) in &f.num.terms {
        let mut e_var = 0u32;
        let mut rest = Vec::new();
        for (k, p) in &m.0 {
            if is_var_kernel(k, var) {
                e_var = *p;
            } else if k.depends_on(var) {
                return None;
            } else {
                rest.push((k.clone(), *p));
            }
        }
        let idx = e_var as usize;
        if by_degree.len() <= idx {
            by_degree.resize(idx + 1, Poly::zero());
        }
        by_degree[idx].add_term(Mono(rest), c.clone());
    }
    let den = poly_to_expr(&f.den);
    let out = by_degree
        .iter()
        .map(|p| {
            if f.den.is_one() {
                poly_to_expr(p)
            } else {
                super::normalize(&(poly_to_expr(p) / den.clone()))
            }
        })
        .collect();
    Some(out)
}

/// Degree of `e` in `var`; `None` when not polynomial. The zero polynomial
/// reports degree 0.
pub fn degree_in(e: &Expr, var: &str) -> Option<u32> {
    let c = poly_coeffs(e, var)?;
    Some(c.len().saturating_sub(1) as u32)
}

/// Total degree of `e` in the given names; `None` when `e` is not a
/// polynomial in them.
pub fn total_degree(e: &Expr, vars: &[&str]) -> Option<u32> {
    let f = to_frac(e).ok()?;
    if f.den.kernels().iter().any(|k| vars.iter().any(|v| k.depends_on(v))) {
        return None;
    }
    let mut best = 0;
    for m in f.num.terms.keys() {
        let mut deg = 0;
        for (k, p) in &m.0 {
            if vars.iter().any(|v| is_var_kernel(k, v)) {
                deg += p;
            } else if vars.iter().any(|v| k.depends_on(v)) {
                return None;
            }
        }
        best = best.max(deg);
    }
    Some(best)
}

/// Kernels of the normal form that depend on `var` without being `var`
/// itself: exponentials, logarithms, roots, trigonometric functions and
/// formal antiderivatives.
pub fn transcendental_kernels(e: &Expr, var: &str) -> Result<Vec<Expr>, ExprError> {
    let f = to_frac(e)?;
    let mut out: Vec<Expr> = f
        .num
        .kernels()
        .into_iter()
        .chain(f.den.kernels())
        .filter(|k| k.depends_on(var) && !is_var_kernel(k, var))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// True if the normal form of `e` takes a logarithm, a root or a fractional
/// power of something that depends on `name`.
pub fn has_root_in(e: &Expr, name: &str) -> bool {
    super::normalize(e).any_node(&|n| match n {
        Node::Ln(a) | Node::Sqrt(a) => a.depends_on(name),
        Node::Pow(b, p) => b.depends_on(name) && p.as_integer().is_none(),
        _ => false,
    })
}
