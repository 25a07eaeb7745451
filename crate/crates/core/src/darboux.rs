//! Darboux transformations of potentials and eigenfunctions, partner
//! potentials, shape invariance and iterated transformations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{DkitError, Result};
use crate::expr::{
    differentiate, is_zero, normalize, substitute, transcendental_kernels, Expr, ZeroVerdict,
};
use crate::riccati::{check_eigenfunction, log_derivative, system_from_potential};

/// Outcome of a full transformation of one system.
#[derive(Debug, Clone)]
pub struct DarbouxTransformResult {
    pub v_plus: Expr,
    pub seed_lambda: Expr,
    pub seed_zeta0: Expr,
    /// Images of the supplied eigenfunctions, keyed by their `λ`. The seed
    /// level maps to `1/ψ₀`.
    pub transformed_solutions: BTreeMap<Expr, Expr>,
    pub strong_isogaloisian: bool,
}

/// Image of an eigenfunction; `degenerate` is set when it vanishes
/// identically, which happens for `ψ = ψ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtSolution {
    pub value: Expr,
    pub degenerate: bool,
}

fn ensure_eigenfunction(v: &Expr, psi: &Expr, lambda: &Expr, var: &str, what: &str) -> Result<()> {
    let sys = system_from_potential(v, lambda, var)?;
    match check_eigenfunction(&sys, psi)? {
        ZeroVerdict::Zero { .. } => Ok(()),
        nz => Err(DkitError::NotEigenfunction { what: what.to_string(), residual: nz.residual() }),
    }
}

/// `V₊ = V₋ - 2 (ln ψ₀)''`. The seed is checked to be an eigenfunction of
/// `V₋` at `λ₁` unless `force` is set.
pub fn dt_potential(v_minus: &Expr, psi0: &Expr, lambda1: &Expr, var: &str, force: bool) -> Result<Expr> {
    let zeta0 = log_derivative(psi0, var)?;
    if !force {
        ensure_eigenfunction(v_minus, psi0, lambda1, var, "seed")?;
    }
    Ok(normalize(&(v_minus.clone() - Expr::num(2) * differentiate(&zeta0, var))))
}

/// `ψ' - (ln ψ₀)' ψ`.
pub fn dt_solution(psi: &Expr, psi0: &Expr, var: &str) -> Result<DtSolution> {
    let zeta0 = log_derivative(psi0, var)?;
    let value = normalize(&(differentiate(psi, var) - zeta0 * psi.clone()));
    let degenerate = value.is_zero_literal() || is_zero(&value).map(|v| v.is_zero()).unwrap_or(false);
    Ok(DtSolution { value, degenerate })
}

/// Image of the seed itself, `1/ψ₀`.
pub fn dt_seed_solution(psi0: &Expr) -> Result<Expr> {
    if normalize(psi0).is_zero_literal() {
        return Err(DkitError::ZeroInput("psi0"));
    }
    Ok(normalize(&psi0.clone().recip()))
}

/// `w = -ζ₀`, so that `V₋ = w² - w' + λ₁` and `V₊ = w² + w' + λ₁`.
pub fn superpotential_from_seed(zeta0: &Expr) -> Expr {
    normalize(&-zeta0.clone())
}

/// `(w² - w', w² + w')`.
pub fn partner_potentials(w: &Expr, var: &str) -> (Expr, Expr) {
    let w2 = w.clone() * w.clone();
    let dw = differentiate(w, var);
    (normalize(&(w2.clone() - dw.clone())), normalize(&(w2 + dw)))
}

/// True when the normal form has no transcendental kernel involving `var`.
pub fn is_rational_in(e: &Expr, var: &str) -> bool {
    transcendental_kernels(e, var).map(|k| k.is_empty()).unwrap_or(false)
}

/// Transforms `V₋` with seed `(ψ₀, λ₁)` and maps the given eigenpairs.
pub fn darboux_transform(
    v_minus: &Expr,
    psi0: &Expr,
    lambda1: &Expr,
    solutions: &[(Expr, Expr)],
    var: &str,
    force: bool,
) -> Result<DarbouxTransformResult> {
    let v_plus = dt_potential(v_minus, psi0, lambda1, var, force)?;
    let seed_zeta0 = log_derivative(psi0, var)?;
    let mut transformed_solutions = BTreeMap::new();
    transformed_solutions.insert(normalize(lambda1), dt_seed_solution(psi0)?);
    for (lambda, psi) in solutions {
        if !force {
            ensure_eigenfunction(v_minus, psi, lambda, var, &format!("solution at lambda = {lambda}"))?;
        }
        transformed_solutions.insert(normalize(lambda), dt_solution(psi, psi0, var)?.value);
    }
    Ok(DarbouxTransformResult {
        strong_isogaloisian: is_rational_in(&seed_zeta0, var),
        v_plus,
        seed_lambda: normalize(lambda1),
        seed_zeta0,
        transformed_solutions,
    })
}

/// A potential template with parameters `params` and a parameter map
/// `a ↦ f(a)` given componentwise in terms of the same names.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    pub template: Expr,
    pub params: Vec<String>,
    pub map: Vec<Expr>,
}

impl PotentialFamily {
    pub fn new(template: Expr, params: &[&str], map: Vec<Expr>) -> Result<Self> {
        if params.len() != map.len() {
            return Err(DkitError::Invalid("parameter map arity differs from parameter tuple".into()));
        }
        Ok(PotentialFamily { template, params: params.iter().map(|s| s.to_string()).collect(), map })
    }

    fn bindings(&self, values: &[Expr]) -> Result<Vec<(String, Expr)>> {
        if values.len() != self.params.len() {
            return Err(DkitError::Invalid(format!("expected {} parameter values", self.params.len())));
        }
        Ok(self.params.iter().cloned().zip(values.iter().cloned()).collect())
    }

    pub fn instantiate(&self, values: &[Expr]) -> Result<Expr> {
        Ok(substitute(&self.template, &self.bindings(values)?))
    }

    /// `f(values)`.
    pub fn image(&self, values: &[Expr]) -> Result<Vec<Expr>> {
        let b = self.bindings(values)?;
        Ok(self.map.iter().map(|m| substitute(m, &b)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeInvariance {
    pub invariant: bool,
    /// `V₊(a₀) - V(f(a₀))`; this is `R(a₁)` when invariant.
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub remainder: Expr,
}

/// Compares the transform of the family at `a0` with the family at `f(a0)`.
pub fn shape_invariance_check(
    family: &PotentialFamily,
    a0: &[Expr],
    seed_psi0: &Expr,
    lambda1: &Expr,
    var: &str,
) -> Result<ShapeInvariance> {
    let v_minus = family.instantiate(a0)?;
    let v_plus = dt_potential(&v_minus, seed_psi0, lambda1, var, false)?;
    let next = family.instantiate(&family.image(a0)?)?;
    let remainder = normalize(&(v_plus - next));
    let invariant = is_zero(&differentiate(&remainder, var))?.is_zero();
    Ok(ShapeInvariance { invariant, remainder })
}

/// `[0, R₂, R₂+R₃, ...]`.
pub fn eigenvalue_chain(r_values: &[Expr]) -> Vec<Expr> {
    let mut out = vec![Expr::zero()];
    let mut acc = Expr::zero();
    for r in r_values {
        acc = normalize(&(acc + r.clone()));
        out.push(acc.clone());
    }
    out
}

/// Applies `depth` successive transformations, the `i`-th with `seeds[i]`.
/// Every seed is checked against the potential it transforms.
pub fn dt_iterate(v0: &Expr, seeds: &[(Expr, Expr)], depth: usize, var: &str) -> Result<Vec<Expr>> {
    if depth > seeds.len() {
        return Err(DkitError::Invalid(format!("depth {depth} exceeds the {} seeds supplied", seeds.len())));
    }
    let mut v = v0.clone();
    let mut out = Vec::with_capacity(depth);
    for (stage, (psi0, lambda1)) in seeds.iter().take(depth).enumerate() {
        v = dt_potential(&v, psi0, lambda1, var, false)
            .map_err(|e| DkitError::Stage { stage, source: Box::new(e) })?;
        out.push(v.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn same(a: &Expr, b: &str) -> bool {
        is_zero(&(a.clone() - p(b))).unwrap().is_zero()
    }

    #[test]
    fn free_particle_partner_is_two_over_x_squared() {
        let v = dt_potential(&p("0"), &p("x"), &p("0"), "x", false).unwrap();
        assert_eq!(v.to_string(), "2/x^2");
    }

    #[test]
    fn oscillator_and_coulomb_partners() {
        let osc = dt_potential(&p("r^2+l*(l+1)/r^2-(2*l+3)"), &p("r^(l+1)*exp(-r^2/2)"), &p("0"), "r", false).unwrap();
        assert!(same(&osc, "r^2+(l+1)*(l+2)/r^2-(2*l+1)"));
        let c = dt_potential(&p("l*(l+1)/r^2-2*(l+1)/r+1"), &p("r^(l+1)*exp(-r)"), &p("0"), "r", false).unwrap();
        assert!(same(&c, "(l+1)*(l+2)/r^2-2*(l+1)/r+1"));
    }

    #[test]
    fn seed_must_be_an_eigenfunction_unless_forced() {
        let err = dt_potential(&p("0"), &p("x^2"), &p("0"), "x", false).unwrap_err();
        assert!(matches!(err, DkitError::NotEigenfunction { .. }));
        assert_eq!(dt_potential(&p("0"), &p("x^2"), &p("0"), "x", true).unwrap(), normalize(&p("4/x^2")));
    }

    #[test]
    fn two_potential_formulas_agree() {
        let psi0 = p("r^(l+1)*exp(-r^2/2)");
        let v = dt_potential(&p("r^2+l*(l+1)/r^2-(2*l+3)"), &psi0, &p("0"), "r", false).unwrap();
        let inv = psi0.clone().recip();
        let alt = psi0 * differentiate(&differentiate(&inv, "r"), "r");
        assert!(is_zero(&(v - alt)).unwrap().is_zero());
    }

    #[test]
    fn solutions_map_to_solutions() {
        let s = dt_solution(&p("exp(sqrt(-lambda)*x)"), &p("x"), "x").unwrap();
        assert!(!s.degenerate);
        assert!(same(&s.value, "(sqrt(-lambda)*x-1)*exp(sqrt(-lambda)*x)/x"));
        let plus = system_from_potential(&p("2/x^2"), &p("lambda"), "x").unwrap();
        assert!(check_eigenfunction(&plus, &s.value).unwrap().is_zero());
        assert!(dt_solution(&p("x"), &p("x"), "x").unwrap().degenerate);
        let seed = dt_seed_solution(&p("x")).unwrap();
        assert!(check_eigenfunction(&plus.with_lambda(&Expr::zero()), &seed).unwrap().is_zero());
    }

    #[test]
    fn superpotential_reproduces_the_pair() {
        let w = superpotential_from_seed(&p("1/x"));
        let (vm, vp) = partner_potentials(&w, "x");
        assert!(vm.is_zero_literal());
        assert_eq!(vp, normalize(&p("2/x^2")));
        let w = superpotential_from_seed(&p("(l+1)/r-r"));
        let (vm, _) = partner_potentials(&w, "r");
        assert!(same(&vm, "r^2+l*(l+1)/r^2-(2*l+3)"));
        let (a, b) = partner_potentials(&p("x"), "x");
        assert_eq!((a, b), (normalize(&p("x^2-1")), normalize(&p("x^2+1"))));
    }

    #[test]
    fn rationality_in_x() {
        assert!(is_rational_in(&p("1/x"), "x"));
        assert!(is_rational_in(&p("sqrt(-lambda)"), "x"));
        assert!(!is_rational_in(&p("exp(-2*sqrt(-lambda)*x)"), "x"));
    }

    #[test]
    fn oscillator_family_is_shape_invariant() {
        let fam = PotentialFamily::new(p("r^2+l*(l+1)/r^2-(2*l+3)"), &["l"], vec![p("l+1")]).unwrap();
        let si = shape_invariance_check(&fam, &[p("l")], &p("r^(l+1)*exp(-r^2/2)"), &p("0"), "r").unwrap();
        assert!(si.invariant);
        assert_eq!(si.remainder, Expr::num(4));
        let free = PotentialFamily::new(p("0"), &[], vec![]).unwrap();
        let si = shape_invariance_check(&free, &[], &p("x"), &p("0"), "x").unwrap();
        assert!(!si.invariant);
    }

    #[test]
    fn chains() {
        let c = eigenvalue_chain(&[p("4"), p("4")]);
        assert_eq!(c, vec![p("0"), p("4"), p("8")]);
        assert_eq!(eigenvalue_chain(&[]), vec![Expr::zero()]);
        let v = dt_iterate(&p("0"), &[(p("x"), p("0")), (p("x^2"), p("0"))], 2, "x").unwrap();
        assert_eq!(v, vec![normalize(&p("2/x^2")), normalize(&p("6/x^2"))]);
        assert!(dt_iterate(&p("0"), &[], 0, "x").unwrap().is_empty());
        let err = dt_iterate(&p("0"), &[(p("x"), p("0")), (p("x^3"), p("0"))], 2, "x").unwrap_err();
        assert!(matches!(err, DkitError::Stage { stage: 1, .. }));
    }
}
