//! Schrödinger systems, their Riccati reductions and the associated planar
//! polynomial vector fields.

use serde::Serialize;

use crate::error::{DkitError, Result};
use crate::expr::{
    degree_in, differentiate, is_zero_with, normalize, numer_denom, substitute, Expr, Sampler, ZeroVerdict, ZETA,
};

/// Which member of a Darboux pair a system describes. Only used for labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        })
    }
}

/// `-Ψ'' + V Ψ = λ Ψ` with `V = T/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerSystem {
    pub t: Expr,
    pub n: Expr,
    /// Normalized `T/N`.
    pub potential: Expr,
    pub lambda: Expr,
    pub var: String,
    pub side: Side,
}

/// `ζ' = V - λ - ζ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiOde {
    pub rhs: Expr,
    pub var: String,
}

/// `X = P ∂/∂ζ + Q ∂/∂x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiVectorField {
    pub p: Expr,
    pub q: Expr,
    pub degree: u32,
    pub var: String,
}

/// Builds a system from `T`, `N` and `λ`. `T` and `N` must be polynomials in
/// `var`. They are kept as given, so `N` fixes the time scale of the field.
pub fn make_system(t: &Expr, n: &Expr, lambda: &Expr, var: &str) -> Result<SchrodingerSystem> {
    for (what, e) in [("T", t), ("N", n)] {
        if e.depends_on(ZETA) {
            return Err(DkitError::DependsOnZeta(what));
        }
        if degree_in(e, var).is_none() {
            return Err(DkitError::NotPolynomial { what, var: var.to_string() });
        }
    }
    if lambda.depends_on(ZETA) || lambda.depends_on(var) {
        return Err(DkitError::Invalid("lambda must be constant".into()));
    }
    if normalize(n).is_zero_literal() {
        return Err(DkitError::ZeroInput("N"));
    }
    let potential = normalize(&(t.clone() / n.clone()));
    Ok(SchrodingerSystem {
        t: normalize(t),
        n: normalize(n),
        potential,
        lambda: normalize(lambda),
        var: var.to_string(),
        side: Side::Minus,
    })
}

/// Builds a system from a potential rational in `var`.
pub fn system_from_potential(v: &Expr, lambda: &Expr, var: &str) -> Result<SchrodingerSystem> {
    let (t, n) = numer_denom(v)?;
    make_system(&t, &n, lambda, var)
}

impl SchrodingerSystem {
    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    /// Same potential at another spectral parameter.
    pub fn with_lambda(&self, lambda: &Expr) -> Self {
        SchrodingerSystem { lambda: normalize(lambda), ..self.clone() }
    }

    /// Substitutes parameter values into the potential and `λ`.
    pub fn bind(&self, bindings: &[(String, Expr)]) -> Result<Self> {
        let t = substitute(&self.t, bindings);
        let n = substitute(&self.n, bindings);
        let lambda = substitute(&self.lambda, bindings);
        Ok(make_system(&t, &n, &lambda, &self.var)?.with_side(self.side))
    }
}

pub fn riccati_reduce(sys: &SchrodingerSystem) -> RiccatiOde {
    let z = Expr::zeta();
    let rhs = normalize(&(sys.potential.clone() - sys.lambda.clone() - z.clone() * z));
    RiccatiOde { rhs, var: sys.var.clone() }
}

impl RiccatiOde {
    /// `ζ_s' - rhs(ζ := ζ_s)` for a candidate solution `ζ_s(x)`.
    pub fn residual(&self, zeta_of_x: &Expr) -> Expr {
        let at = substitute(&self.rhs, &[(ZETA.to_string(), zeta_of_x.clone())]);
        normalize(&(differentiate(zeta_of_x, &self.var) - at))
    }
}

pub fn build_vector_field(sys: &SchrodingerSystem) -> RiccatiVectorField {
    let z = Expr::zeta();
    let n = sys.n.clone();
    let p = normalize(&(sys.t.clone() - sys.lambda.clone() * n.clone() - n.clone() * z.clone() * z));
    let deg_t = degree_in(&sys.t, &sys.var).unwrap_or(0);
    let deg_n = degree_in(&sys.n, &sys.var).unwrap_or(0);
    RiccatiVectorField { p, q: n, degree: deg_t.max(deg_n + 2), var: sys.var.clone() }
}

impl RiccatiVectorField {
    /// `X(e) = P ∂e/∂ζ + Q ∂e/∂x`.
    pub fn apply(&self, e: &Expr) -> Expr {
        let dz = differentiate(e, ZETA);
        let dx = differentiate(e, &self.var);
        normalize(&(self.p.clone() * dz + self.q.clone() * dx))
    }

    /// `∂P/∂ζ + ∂Q/∂x`.
    pub fn divergence(&self) -> Expr {
        normalize(&(differentiate(&self.p, ZETA) + differentiate(&self.q, &self.var)))
    }
}

/// `ψ'/ψ`.
pub fn log_derivative(psi: &Expr, var: &str) -> Result<Expr> {
    if normalize(psi).is_zero_literal() {
        return Err(DkitError::ZeroInput("psi"));
    }
    Ok(normalize(&(differentiate(psi, var) / psi.clone())))
}

/// Zero test of `-ψ'' + (V - λ) ψ`.
pub fn check_eigenfunction(sys: &SchrodingerSystem, psi: &Expr) -> Result<ZeroVerdict> {
    check_eigenfunction_with(sys, psi, &Sampler::default())
}

pub fn check_eigenfunction_with(sys: &SchrodingerSystem, psi: &Expr, sampler: &Sampler) -> Result<ZeroVerdict> {
    let d2 = differentiate(&differentiate(psi, &sys.var), &sys.var);
    let residual = (sys.potential.clone() - sys.lambda.clone()) * psi.clone() - d2;
    Ok(is_zero_with(&residual, sampler)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, parse, total_degree};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn oscillator() -> SchrodingerSystem {
        make_system(&p("r^4+l*(l+1)-(2*l+3)*r^2"), &p("r^2"), &p("lambda"), "r").unwrap()
    }

    #[test]
    fn free_particle_field_is_quadratic() {
        let sys = make_system(&p("0"), &p("1"), &p("lambda"), "x").unwrap();
        let x = build_vector_field(&sys);
        assert_eq!(x.p, normalize(&p("-lambda-zeta^2")));
        assert_eq!(x.q, Expr::one());
        assert_eq!(x.degree, 2);
        assert_eq!(riccati_reduce(&sys).rhs, normalize(&p("-lambda-zeta^2")));
        assert_eq!(x.divergence(), normalize(&p("-2*zeta")));
    }

    #[test]
    fn transformed_free_particle_has_degree_four() {
        let sys = make_system(&p("2"), &p("x^2"), &p("lambda"), "x").unwrap();
        let x = build_vector_field(&sys);
        assert_eq!(x.p, normalize(&p("2-lambda*x^2-x^2*zeta^2")));
        assert_eq!(x.degree, 4);
        assert_eq!(total_degree(&x.p, &["zeta", "x"]), Some(4));
    }

    #[test]
    fn oscillator_degree_and_divergence() {
        let x = build_vector_field(&oscillator());
        assert_eq!(x.degree, 4);
        assert_eq!(x.divergence(), normalize(&p("-2*r^2*zeta+2*r")));
    }

    #[test]
    fn field_quotient_matches_riccati_rhs() {
        let sys = oscillator();
        let x = build_vector_field(&sys);
        let ode = riccati_reduce(&sys);
        assert!(normalize(&(x.p.clone() / x.q.clone() - ode.rhs)).is_zero_literal());
    }

    #[test]
    fn zero_denominator_is_rejected() {
        assert!(matches!(make_system(&p("1"), &p("0"), &p("lambda"), "x"), Err(DkitError::ZeroInput("N"))));
        assert!(make_system(&p("zeta"), &p("1"), &p("lambda"), "x").is_err());
        assert!(make_system(&p("exp(x)"), &p("1"), &p("lambda"), "x").is_err());
    }

    #[test]
    fn apply_on_coordinates_and_curve() {
        let sys = make_system(&p("0"), &p("1"), &p("lambda"), "x").unwrap();
        let x = build_vector_field(&sys);
        assert_eq!(x.apply(&Expr::zeta()), x.p);
        assert_eq!(x.apply(&Expr::var("x")), x.q);
        let f = p("-zeta+sqrt(-lambda)");
        let expected = p("-(zeta+sqrt(-lambda))*(-zeta+sqrt(-lambda))");
        assert!(is_zero(&(x.apply(&f) - expected)).unwrap().is_zero());
    }

    #[test]
    fn log_derivatives_of_seeds() {
        assert_eq!(log_derivative(&p("x"), "x").unwrap(), normalize(&p("1/x")));
        let z = log_derivative(&p("r^(l+1)*exp(-r^2/2)"), "r").unwrap();
        assert!(normalize(&(z - p("(l+1)/r-r"))).is_zero_literal());
        let z = log_derivative(&p("r^(l+1)*exp(-r)"), "r").unwrap();
        assert!(normalize(&(z - p("(l+1)/r-1"))).is_zero_literal());
        assert!(log_derivative(&p("x-x"), "x").is_err());
    }

    #[test]
    fn eigenfunction_checks() {
        let free = make_system(&p("0"), &p("1"), &p("lambda"), "x").unwrap();
        assert!(check_eigenfunction(&free, &p("exp(sqrt(-lambda)*x)")).unwrap().is_zero());
        assert!(!check_eigenfunction(&free.with_lambda(&Expr::zero()), &p("x^2")).unwrap().is_zero());
        let osc = oscillator().with_lambda(&Expr::zero());
        assert!(check_eigenfunction(&osc, &p("r^(l+1)*exp(-r^2/2)")).unwrap().is_zero());
    }

    #[test]
    fn riccati_reduction_preserves_solutions() {
        let osc = oscillator().with_lambda(&Expr::zero());
        let z = log_derivative(&p("r^(l+1)*exp(-r^2/2)"), "r").unwrap();
        let res = riccati_reduce(&osc).residual(&z);
        assert!(is_zero(&res).unwrap().is_zero());
    }
}
