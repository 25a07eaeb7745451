//! Invariant curves, generalized exponential factors, integrating factors and
//! first integrals of Riccati vector fields, built from Riccati solutions and
//! checked on construction.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{DkitError, Result};
use crate::expr::{
    antiderivative, differentiate, has_root_in, is_variable_name, is_zero_with, normalize, substitute,
    substitute_square, transcendental_kernels, Expr, Sampler, ZeroVerdict, ZETA,
};
use crate::riccati::{build_vector_field, riccati_reduce, system_from_potential, RiccatiVectorField, SchrodingerSystem, Side};

/// Smallest function field an object was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Membership {
    #[serde(rename = "rational")]
    Rational,
    #[serde(rename = "rational-plus-exp-log")]
    RationalPlusExpLog,
    #[serde(rename = "formal-antiderivative")]
    FormalAntiderivative,
}

impl std::fmt::Display for Membership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Membership::Rational => "rational",
            Membership::RationalPlusExpLog => "rational-plus-exp-log",
            Membership::FormalAntiderivative => "formal-antiderivative",
        })
    }
}

/// Classifies the normal form of `e` by the kernels it contains that depend on
/// a variable. Parameters and constants such as `sqrt(-lambda)` are rational.
pub fn field_membership(e: &Expr) -> Membership {
    let mut kernels = Vec::new();
    for name in e.free_names().iter().filter(|n| is_variable_name(n)) {
        match transcendental_kernels(e, name) {
            Ok(k) => kernels.extend(k),
            Err(_) => return Membership::RationalPlusExpLog,
        }
    }
    if kernels.iter().any(Expr::has_antideriv) {
        Membership::FormalAntiderivative
    } else if kernels.is_empty() {
        Membership::Rational
    } else {
        Membership::RationalPlusExpLog
    }
}

/// `f` with `X(f) = K f`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCurve {
    pub f: Expr,
    pub k: Expr,
}

/// `F = exp(∫S)` with `X(F) = L F`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedExponentialFactor {
    pub f: Expr,
    pub l: Expr,
}

/// Outcome of one symbolic identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicCheck {
    pub name: &'static str,
    pub anchor: &'static str,
    pub verdict: std::result::Result<ZeroVerdict, String>,
}

impl SymbolicCheck {
    pub fn passed(&self) -> bool {
        matches!(&self.verdict, Ok(v) if v.is_zero())
    }
}

/// Curve, exponential factor, integrating factor and first integral of one
/// Riccati field at one `λ`. Constructors run every symbolic check and refuse
/// to return a certificate that fails one; [`IntegrabilityCertificate::corrupted`]
/// is the only way to obtain a failing one, for fault injection.
#[derive(Debug, Clone)]
pub struct IntegrabilityCertificate {
    pub side: Side,
    pub lambda: Expr,
    pub system: SchrodingerSystem,
    pub field: RiccatiVectorField,
    /// Riccati solution the curve is built on, and the second solution used
    /// for the first integral.
    pub zeta_1: Expr,
    pub zeta_2: Option<Expr>,
    pub curve: InvariantCurve,
    pub exp_factor: GeneralizedExponentialFactor,
    pub integrating_factor: Expr,
    pub first_integral: Option<Expr>,
    pub membership: BTreeMap<&'static str, Membership>,
    pub checks: Vec<SymbolicCheck>,
    pub corrupted: Option<String>,
    /// Parameters replaced by a square to remove roots such as
    /// `sqrt(-lambda)`. Stored expressions are in the new parameters;
    /// [`IntegrabilityCertificate::restore`] maps them back.
    pub reparametrization: Vec<Reparametrization>,
}

/// `param = sign * root²`, so that `sqrt(sign * param)` becomes `root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reparametrization {
    pub param: String,
    pub root: String,
    pub sign: i64,
}

impl Reparametrization {
    fn value(&self) -> Expr {
        Expr::num(self.sign) * Expr::param(&self.root).powi(2)
    }

    fn apply(&self, e: &Expr) -> Expr {
        substitute_square(e, &self.param, &self.value(), &Expr::param(&self.root))
    }

    fn inverse(&self) -> (String, Expr) {
        (self.root.clone(), (Expr::num(self.sign) * Expr::param(&self.param)).sqrt())
    }
}

/// Finds, for every parameter under a square root in `inputs`, a sign that
/// removes all roots of it.
fn find_reparametrizations(inputs: &[&Expr]) -> Vec<Reparametrization> {
    let mut names = std::collections::BTreeSet::new();
    for e in inputs {
        names.extend(e.free_names());
    }
    let mut out = Vec::new();
    for param in names.iter().filter(|n| !is_variable_name(n)) {
        if !inputs.iter().any(|e| has_root_in(e, param)) {
            continue;
        }
        let root = (0..).map(|i| format!("{param}_root{i}")).find(|n| !names.contains(n)).unwrap();
        for sign in [-1, 1] {
            let rep = Reparametrization { param: param.clone(), root: root.clone(), sign };
            if inputs.iter().all(|e| !has_root_in(&rep.apply(e), &root)) {
                out.push(rep);
                break;
            }
        }
    }
    out
}

fn reparametrize(reps: &[Reparametrization], e: &Expr) -> Expr {
    reps.iter().fold(normalize(e), |acc, r| r.apply(&acc))
}

fn reparametrize_system(reps: &[Reparametrization], sys: &SchrodingerSystem) -> Result<SchrodingerSystem> {
    if reps.is_empty() {
        return Ok(sys.clone());
    }
    let t = reparametrize(reps, &sys.t);
    let n = reparametrize(reps, &sys.n);
    let lambda = reparametrize(reps, &sys.lambda);
    Ok(crate::riccati::make_system(&t, &n, &lambda, &sys.var)?.with_side(sys.side))
}

/// The pieces a certificate is assembled from. `psi_1` is a closed or formal
/// representation of `exp(∫ζ₁)`, and `ratio` one of `exp(∫(ζ₂ - ζ₁))`.
struct Ingredients {
    side: Side,
    system: SchrodingerSystem,
    zeta_1: Expr,
    psi_1: Expr,
    second: Option<(Expr, Expr)>,
}

fn exp_of_integral(e: &Expr, var: &str) -> Result<Expr> {
    Ok(normalize(&antiderivative(e, var)?.exp()))
}

fn cofactors(n: &Expr, var: &str, zeta: &Expr) -> (Expr, Expr) {
    let z = Expr::zeta();
    let k = normalize(&(-(n.clone() * (z + zeta.clone()))));
    let l = normalize(&(differentiate(n, var) / Expr::num(2) + n.clone() * zeta.clone()));
    (k, l)
}

impl IntegrabilityCertificate {
    fn assemble(ing: Ingredients, sampler: &Sampler) -> Result<Self> {
        let Ingredients { side, system, zeta_1, psi_1, second } = ing;
        let var = system.var.clone();
        let n = system.n.clone();
        let dn = differentiate(&n, &var);
        let field = build_vector_field(&system);
        let z = Expr::zeta();

        let f = normalize(&(zeta_1.clone() - z.clone()));
        let (k, l) = cofactors(&n, &var, &zeta_1);
        let sqrt_n = exp_of_integral(&(dn.clone() / (Expr::num(2) * n.clone())), &var)?;
        let big_f = normalize(&(sqrt_n * psi_1.clone()));
        let inv_n = exp_of_integral(&(-(dn / n.clone())), &var)?;
        let r = normalize(&(inv_n / (psi_1.clone().powi(2) * f.clone().powi(2))));

        let (zeta_2, first_integral) = match second {
            Some((z2, ratio)) => {
                let f2 = normalize(&(z2.clone() - z.clone()));
                let i = normalize(&(f2 / f.clone() * ratio));
                (Some(z2), Some(i))
            }
            None => (None, None),
        };

        let mut membership = BTreeMap::new();
        membership.insert("f", field_membership(&f));
        membership.insert("K", field_membership(&k));
        membership.insert("F", field_membership(&big_f));
        membership.insert("L", field_membership(&l));
        membership.insert("R", field_membership(&r));
        if let Some(i) = &first_integral {
            membership.insert("I", field_membership(i));
        }

        let mut cert = IntegrabilityCertificate {
            side,
            lambda: system.lambda.clone(),
            system,
            field,
            zeta_1,
            zeta_2,
            curve: InvariantCurve { f, k },
            exp_factor: GeneralizedExponentialFactor { f: big_f, l },
            integrating_factor: r,
            first_integral,
            membership,
            checks: Vec::new(),
            corrupted: None,
            reparametrization: Vec::new(),
        };
        cert.checks = cert.symbolic_checks(sampler);
        if let Some(bad) = cert.checks.iter().find(|c| !c.passed()) {
            let residual = match &bad.verdict {
                Ok(v) => v.residual(),
                Err(_) => f64::NAN,
            };
            return Err(DkitError::CheckFailed { object: bad.name.to_string(), residual });
        }
        Ok(cert)
    }

    /// Expressions whose vanishing the certificate claims, by check name.
    /// Balance sums are rebuilt from `ζ₁`, `ζ₂` and `N` so that each record
    /// depends on exactly one stored object.
    pub fn identities(&self) -> Vec<(&'static str, &'static str, Expr)> {
        let x = &self.field;
        let var = &self.system.var;
        let mut out = Vec::new();
        let InvariantCurve { f, k } = &self.curve;
        out.push(("invariant_curve", "invariant curve: X(f) - K f = 0", x.apply(f) - k.clone() * f.clone()));
        let GeneralizedExponentialFactor { f: big_f, l } = &self.exp_factor;
        out.push(("exp_factor", "exponential factor: X(F) - L F = 0", x.apply(big_f) - l.clone() * big_f.clone()));
        let r = &self.integrating_factor;
        let rp = r.clone() * x.p.clone();
        let rq = r.clone() * x.q.clone();
        out.push((
            "integrating_factor",
            "integrating factor: d(RP)/dzeta + d(RQ)/dx = 0",
            differentiate(&rp, ZETA) + differentiate(&rq, var),
        ));
        if let Some(i) = &self.first_integral {
            out.push(("first_integral", "first integral: X(I) = 0", x.apply(i)));
        }
        let (k1, l1) = cofactors(&self.system.n, var, &self.zeta_1);
        if let Some(z2) = &self.zeta_2 {
            let (k2, l2) = cofactors(&self.system.n, var, z2);
            out.push((
                "balance_first_integral",
                "cofactor balance for a first integral: -K1 + K2 - L1 + L2 = 0",
                k2 - k1.clone() + l2 - l1.clone(),
            ));
        }
        out.push((
            "balance_integrating_factor",
            "cofactor balance for an integrating factor: -2K - 2L + div X = 0",
            Expr::num(-2) * k1 - Expr::num(2) * l1 + x.divergence(),
        ));
        out
    }

    pub fn symbolic_checks(&self, sampler: &Sampler) -> Vec<SymbolicCheck> {
        self.identities()
            .into_iter()
            .map(|(name, anchor, e)| SymbolicCheck {
                name,
                anchor,
                verdict: is_zero_with(&e, sampler).map_err(|e| e.to_string()),
            })
            .collect()
    }

    /// Maps a stored expression back to the caller's parameters.
    pub fn restore(&self, e: &Expr) -> Expr {
        let inverse: Vec<(String, Expr)> = self.reparametrization.iter().map(Reparametrization::inverse).collect();
        if inverse.is_empty() {
            e.clone()
        } else {
            substitute(e, &inverse)
        }
    }

    /// The certificate's system in the caller's parameters.
    pub fn restored_system(&self) -> Result<SchrodingerSystem> {
        let sys = &self.system;
        Ok(crate::riccati::make_system(&self.restore(&sys.t), &self.restore(&sys.n), &self.restore(&sys.lambda), &sys.var)?
            .with_side(sys.side))
    }

    /// A copy with one object altered, bypassing construction checks.
    /// `object` is one of `f`, `K`, `F`, `L`, `R`, `I`.
    pub fn corrupted(&self, object: &str) -> Result<Self> {
        let mut c = self.clone();
        let var = Expr::symbol(&self.system.var);
        match object {
            "f" => c.curve.f = normalize(&(c.curve.f.clone() + Expr::one())),
            "K" => c.curve.k = normalize(&(c.curve.k.clone() + Expr::one())),
            "F" => c.exp_factor.f = normalize(&(c.exp_factor.f.clone() * var.exp())),
            "L" => c.exp_factor.l = normalize(&(c.exp_factor.l.clone() + Expr::one())),
            "R" => c.integrating_factor = normalize(&(c.integrating_factor.clone() + Expr::one())),
            "I" => {
                let (Some(i), Some(z2)) = (&self.first_integral, &self.zeta_2) else {
                    return Err(DkitError::Invalid("certificate has no first integral".into()));
                };
                // Flip the sign of the exponential part: divide by exp(∫(ζ₂-ζ₁)) twice.
                let ratio = exp_of_integral(&(z2.clone() - self.zeta_1.clone()), &self.system.var)?;
                c.first_integral = Some(normalize(&(i.clone() / ratio.powi(2))));
            }
            other => return Err(DkitError::Invalid(format!("unknown certificate object `{other}`"))),
        }
        c.corrupted = Some(object.to_string());
        Ok(c)
    }
}

fn ensure_riccati(sys: &SchrodingerSystem, zeta: &Expr, what: &str, sampler: &Sampler) -> Result<()> {
    let res = riccati_reduce(sys).residual(zeta);
    let v = is_zero_with(&res, sampler)?;
    if v.is_zero() {
        Ok(())
    } else {
        Err(DkitError::NotRiccatiSolution { what: what.to_string(), residual: v.residual() })
    }
}

/// Certificate on the field of `sys` built on the Riccati solution
/// `zeta_lambda`. Without `zeta_lambda_2` the second solution comes from
/// [`second_solution`].
pub fn build_certificate_minus(
    sys: &SchrodingerSystem,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
) -> Result<IntegrabilityCertificate> {
    build_certificate_minus_with(sys, zeta_lambda, zeta_lambda_2, &Sampler::default())
}

pub fn build_certificate_minus_with(
    sys: &SchrodingerSystem,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
    sampler: &Sampler,
) -> Result<IntegrabilityCertificate> {
    let mut inputs = vec![&sys.t, &sys.n, &sys.lambda, zeta_lambda];
    inputs.extend(zeta_lambda_2);
    let reps = find_reparametrizations(&inputs);
    let sys = reparametrize_system(&reps, sys)?;
    let z1 = reparametrize(&reps, zeta_lambda);
    let z2 = zeta_lambda_2.map(|z| reparametrize(&reps, z));
    let mut cert = minus_certificate(&sys, &z1, z2.as_ref(), sampler)?;
    cert.reparametrization = reps;
    Ok(cert)
}

fn minus_certificate(
    sys: &SchrodingerSystem,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
    sampler: &Sampler,
) -> Result<IntegrabilityCertificate> {
    let var = sys.var.clone();
    let z1 = normalize(zeta_lambda);
    ensure_riccati(sys, &z1, "zeta_lambda", sampler)?;
    let z2 = match zeta_lambda_2 {
        Some(z) => {
            let z = normalize(z);
            ensure_riccati(sys, &z, "zeta_lambda_2", sampler)?;
            z
        }
        None => second_solution(&z1, &var)?,
    };
    if normalize(&(z2.clone() - z1.clone())).is_zero_literal() {
        return Err(DkitError::Degenerate("the two Riccati solutions coincide".into()));
    }
    let psi_1 = exp_of_integral(&z1, &var)?;
    let ratio = exp_of_integral(&(z2.clone() - z1.clone()), &var)?;
    IntegrabilityCertificate::assemble(
        Ingredients { side: Side::Minus, system: sys.clone().with_side(Side::Minus), zeta_1: z1, psi_1, second: Some((z2, ratio)) },
        sampler,
    )
}

/// `λ₁ = V - ζ₀' - ζ₀²`, which must be constant for a seed.
fn seed_level(sys: &SchrodingerSystem, zeta0: &Expr, sampler: &Sampler) -> Result<Expr> {
    let var = &sys.var;
    let l1 = normalize(&(sys.potential.clone() - differentiate(zeta0, var) - zeta0.clone() * zeta0.clone()));
    let v = is_zero_with(&differentiate(&l1, var), sampler)?;
    if !v.is_zero() {
        return Err(DkitError::NotRiccatiSolution { what: "zeta0".into(), residual: v.residual() });
    }
    Ok(l1)
}

fn plus_system(sys_minus: &SchrodingerSystem, zeta0: &Expr, lambda: &Expr) -> Result<SchrodingerSystem> {
    let v_plus = normalize(&(sys_minus.potential.clone() - Expr::num(2) * differentiate(zeta0, &sys_minus.var)));
    Ok(system_from_potential(&v_plus, lambda, &sys_minus.var)?.with_side(Side::Plus))
}

/// `ζ + (ln(ζ - ζ₀))'`, the image of a Riccati solution under the
/// transformation with seed `ζ₀`.
pub fn transformed_zeta(zeta: &Expr, zeta0: &Expr, var: &str) -> Result<Expr> {
    let d = normalize(&(zeta.clone() - zeta0.clone()));
    if d.is_zero_literal() {
        return Err(DkitError::Degenerate("zeta_lambda coincides with zeta0".into()));
    }
    Ok(normalize(&(zeta.clone() + differentiate(&d, var) / d)))
}

/// Certificate on the transformed field, built from a Riccati solution
/// `zeta_lambda` of `sys_minus` at `λ ≠ λ₁` and the seed `ζ₀`.
pub fn build_certificate_plus(
    sys_minus: &SchrodingerSystem,
    zeta0: &Expr,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
) -> Result<IntegrabilityCertificate> {
    build_certificate_plus_with(sys_minus, zeta0, zeta_lambda, zeta_lambda_2, &Sampler::default())
}

pub fn build_certificate_plus_with(
    sys_minus: &SchrodingerSystem,
    zeta0: &Expr,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
    sampler: &Sampler,
) -> Result<IntegrabilityCertificate> {
    let mut inputs = vec![&sys_minus.t, &sys_minus.n, &sys_minus.lambda, zeta0, zeta_lambda];
    inputs.extend(zeta_lambda_2);
    let reps = find_reparametrizations(&inputs);
    let sys = reparametrize_system(&reps, sys_minus)?;
    let z0 = reparametrize(&reps, zeta0);
    let z1 = reparametrize(&reps, zeta_lambda);
    let z2 = zeta_lambda_2.map(|z| reparametrize(&reps, z));
    let mut cert = plus_certificate(&sys, &z0, &z1, z2.as_ref(), sampler)?;
    cert.reparametrization = reps;
    Ok(cert)
}

fn plus_certificate(
    sys_minus: &SchrodingerSystem,
    zeta0: &Expr,
    zeta_lambda: &Expr,
    zeta_lambda_2: Option<&Expr>,
    sampler: &Sampler,
) -> Result<IntegrabilityCertificate> {
    let var = sys_minus.var.clone();
    let zeta0 = normalize(zeta0);
    seed_level(sys_minus, &zeta0, sampler)?;
    let z1 = normalize(zeta_lambda);
    ensure_riccati(sys_minus, &z1, "zeta_lambda", sampler)?;
    let zp1 = transformed_zeta(&z1, &zeta0, &var)?;
    let z2 = match zeta_lambda_2 {
        Some(z) => {
            let z = normalize(z);
            ensure_riccati(sys_minus, &z, "zeta_lambda_2", sampler)?;
            z
        }
        None => second_solution(&z1, &var)?,
    };
    let zp2 = transformed_zeta(&z2, &zeta0, &var)?;
    let d1 = normalize(&(z1.clone() - zeta0.clone()));
    let d2 = normalize(&(z2.clone() - zeta0.clone()));
    let psi_1 = normalize(&(d1.clone() * exp_of_integral(&z1, &var)?));
    let ratio = normalize(&(d2 / d1 * exp_of_integral(&(z2 - z1), &var)?));
    let system = plus_system(sys_minus, &zeta0, &sys_minus.lambda)?;
    IntegrabilityCertificate::assemble(
        Ingredients { side: Side::Plus, system, zeta_1: zp1, psi_1, second: Some((zp2, ratio)) },
        sampler,
    )
}

/// Certificate on the transformed field at the seed level `λ₁`, where the
/// general construction degenerates. The curve is built on `-ζ₀`, the
/// logarithmic derivative of `1/ψ₀`.
pub fn build_certificate_plus_seed(sys_minus: &SchrodingerSystem, zeta0: &Expr) -> Result<IntegrabilityCertificate> {
    build_certificate_plus_seed_with(sys_minus, zeta0, &Sampler::default())
}

pub fn build_certificate_plus_seed_with(
    sys_minus: &SchrodingerSystem,
    zeta0: &Expr,
    sampler: &Sampler,
) -> Result<IntegrabilityCertificate> {
    let reps = find_reparametrizations(&[&sys_minus.t, &sys_minus.n, zeta0]);
    let sys = reparametrize_system(&reps, sys_minus)?;
    let mut cert = plus_seed_certificate(&sys, &reparametrize(&reps, zeta0), sampler)?;
    cert.reparametrization = reps;
    Ok(cert)
}

fn plus_seed_certificate(sys_minus: &SchrodingerSystem, zeta0: &Expr, sampler: &Sampler) -> Result<IntegrabilityCertificate> {
    let var = sys_minus.var.clone();
    let zeta0 = normalize(zeta0);
    let lambda1 = seed_level(sys_minus, &zeta0, sampler)?;
    let system = plus_system(sys_minus, &zeta0, &lambda1)?;
    let z1 = normalize(&-zeta0.clone());
    let z2 = second_solution(&z1, &var)?;
    let psi_1 = exp_of_integral(&z1, &var)?;
    let ratio = exp_of_integral(&(z2.clone() - z1.clone()), &var)?;
    IntegrabilityCertificate::assemble(
        Ingredients { side: Side::Plus, system, zeta_1: z1, psi_1, second: Some((z2, ratio)) },
        sampler,
    )
}

/// `ζ₂ = ζ₁ + G/∫G` with `G = exp(-2∫ζ₁)`.
pub fn second_solution(zeta1: &Expr, var: &str) -> Result<Expr> {
    let g = exp_of_integral(&(Expr::num(-2) * zeta1.clone()), var)?;
    let a = antiderivative(&g, var)?;
    Ok(normalize(&(zeta1.clone() + g / a)))
}

/// `I = ((-ζ + ζ₂)/(-ζ + ζ₁)) exp(∫(ζ₂ - ζ₁))`.
pub fn first_integral_two_solutions(zeta1: &Expr, zeta2: &Expr, var: &str) -> Result<Expr> {
    let diff = normalize(&(zeta2.clone() - zeta1.clone()));
    if diff.is_zero_literal() {
        return Err(DkitError::Degenerate("identical solutions".into()));
    }
    let z = Expr::zeta();
    let quotient = (zeta2.clone() - z.clone()) / (zeta1.clone() - z);
    Ok(normalize(&(quotient * exp_of_integral(&diff, var)?)))
}

/// Cross-ratio first integral `(v₃-v₂)(v₁-ζ) / ((v₃-v₁)(v₂-ζ))` of `ζ` and
/// three distinct solutions.
pub fn rational_first_integral(v1: &Expr, v2: &Expr, v3: &Expr) -> Result<Expr> {
    for (a, b) in [(v1, v2), (v1, v3), (v2, v3)] {
        if normalize(&(a.clone() - b.clone())).is_zero_literal() {
            return Err(DkitError::Degenerate("coincident solutions".into()));
        }
    }
    let z = Expr::zeta();
    let num = (v3.clone() - v2.clone()) * (v1.clone() - z.clone());
    let den = (v3.clone() - v1.clone()) * (v2.clone() - z);
    Ok(normalize(&(num / den)))
}

/// `Σ μᵢ Cᵢ` for `(cofactor, exponent)` pairs.
pub fn verify_balance_first_integral(terms: &[(Expr, Expr)]) -> Result<ZeroVerdict> {
    let sum = Expr::add(terms.iter().map(|(c, m)| m.clone() * c.clone()).collect());
    Ok(crate::expr::is_zero(&sum)?)
}

/// `Σ μᵢ Cᵢ + div X`.
pub fn verify_balance_integrating_factor(terms: &[(Expr, Expr)], field: &RiccatiVectorField) -> Result<ZeroVerdict> {
    let mut parts: Vec<Expr> = terms.iter().map(|(c, m)| m.clone() * c.clone()).collect();
    parts.push(field.divergence());
    Ok(crate::expr::is_zero(&Expr::add(parts))?)
}

/// First-integral types of a Riccati field, by the solutions known for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Case {
    /// No usable solution.
    #[serde(rename = "unknown")]
    Unknown,
    /// One rational solution; first integral of Darboux–Schwarz–Christoffel type.
    #[serde(rename = "1i")]
    OneI,
    /// A solution algebraic of degree two; hyperelliptic first integral.
    #[serde(rename = "2")]
    Two,
    /// Two solutions in closed form; generalized Darboux first integral.
    #[serde(rename = "1ii")]
    OneII,
    /// Three rational solutions; rational first integral.
    #[serde(rename = "3")]
    Three,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::Unknown => "unknown",
            Case::OneI => "1i",
            Case::Two => "2",
            Case::OneII => "1ii",
            Case::Three => "3",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub case: Case,
    #[serde(serialize_with = "crate::report::serialize_opt_expr")]
    pub first_integral: Option<Expr>,
    pub galois: String,
    /// Membership of every solution used, including a derived second one.
    pub labels: Vec<(String, Membership)>,
}

fn has_var_sqrt(e: &Expr, var: &str) -> bool {
    e.any_node(&|n| matches!(n, crate::expr::Node::Sqrt(a) if a.depends_on(var)))
        || e.any_node(&|n| matches!(n, crate::expr::Node::Pow(b, k)
            if b.depends_on(var) && k.as_rational().is_some_and(|q| !q.is_integer())))
}

/// Assigns a first-integral case to a list of residual-checked solutions and
/// builds the first integral when the case provides one. Missing labels are
/// computed with [`field_membership`].
pub fn classify(solutions: &[(Expr, Option<Membership>)], var: &str) -> Result<ClassificationReport> {
    let labelled: Vec<(Expr, Membership)> = solutions
        .iter()
        .map(|(e, m)| (normalize(e), m.unwrap_or_else(|| field_membership(e))))
        .collect();
    let mut distinct: Vec<(Expr, Membership)> = Vec::new();
    for (e, m) in labelled {
        if !distinct.iter().any(|(d, _)| normalize(&(d.clone() - e.clone())).is_zero_literal()) {
            distinct.push((e, m));
        }
    }
    let mut labels: Vec<(String, Membership)> = distinct.iter().map(|(e, m)| (e.to_string(), *m)).collect();
    let rational: Vec<&Expr> = distinct.iter().filter(|(_, m)| *m == Membership::Rational).map(|(e, _)| e).collect();
    let closed: Vec<&Expr> =
        distinct.iter().filter(|(_, m)| *m != Membership::FormalAntiderivative).map(|(e, _)| e).collect();

    let (case, first_integral) = if rational.len() >= 3 {
        (Case::Three, Some(rational_first_integral(rational[0], rational[1], rational[2])?))
    } else if closed.len() >= 2 {
        let mut ordered: Vec<&Expr> = rational.clone();
        ordered.extend(closed.iter().filter(|e| !rational.contains(e)));
        (Case::OneII, Some(first_integral_two_solutions(ordered[0], ordered[1], var)?))
    } else if let Some(v1) = closed.first() {
        if has_var_sqrt(v1, var) {
            (Case::Two, None)
        } else {
            let v2 = second_solution(v1, var)?;
            let m2 = field_membership(&v2);
            labels.push((v2.to_string(), m2));
            if m2 != Membership::FormalAntiderivative {
                (Case::OneII, Some(first_integral_two_solutions(v1, &v2, var)?))
            } else if rational.is_empty() {
                (Case::Unknown, None)
            } else {
                (Case::OneI, None)
            }
        }
    } else {
        (Case::Unknown, None)
    };
    let galois = match case {
        Case::Three => "finite differential Galois group (rational first integral)",
        Case::OneI | Case::OneII | Case::Two => "virtually solvable differential Galois group",
        Case::Unknown => "unknown",
    };
    Ok(ClassificationReport { case, first_integral, galois: galois.to_string(), labels })
}

/// `Π(ζ - Sᵢ)^{λᵢ} · exp(S̃) · Π(x - xᵢ)^{bᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedDarbouxFunction {
    pub factors: Vec<(Expr, Expr)>,
    pub exp_part: Expr,
    pub power_factors: Vec<(Expr, Expr)>,
}

impl GeneralizedDarbouxFunction {
    pub fn to_expr(&self, var: &str) -> Expr {
        let x = Expr::symbol(var);
        let mut parts = Vec::new();
        for (s, l) in &self.factors {
            parts.push(Expr::pow(Expr::zeta() - s.clone(), l.clone()));
        }
        parts.push(self.exp_part.clone().exp());
        for (xi, b) in &self.power_factors {
            parts.push(Expr::pow(x.clone() - xi.clone(), b.clone()));
        }
        Expr::mul(parts)
    }
}

/// `1/(ζ - v₁) · exp(g) Π(x - xᵢ)^{aᵢ} + ∫ exp(g(u)) Π(u - xᵢ)^{aᵢ-mᵢ} P(u) du`.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxSchwarzChristoffelIntegral {
    pub v1: Expr,
    pub g: Expr,
    /// `(xᵢ, aᵢ, mᵢ)`.
    pub poles: Vec<(Expr, Expr, u32)>,
    pub p: Expr,
}

impl DarbouxSchwarzChristoffelIntegral {
    pub fn to_expr(&self, var: &str) -> Result<Expr> {
        let x = Expr::symbol(var);
        let mut head = vec![(Expr::zeta() - self.v1.clone()).recip(), self.g.clone().exp()];
        let mut body = vec![self.g.clone().exp(), self.p.clone()];
        for (xi, a, m) in &self.poles {
            head.push(Expr::pow(x.clone() - xi.clone(), a.clone()));
            body.push(Expr::pow(x.clone() - xi.clone(), a.clone() - Expr::num(*m as i64)));
        }
        Ok(Expr::mul(head) + antiderivative(&Expr::mul(body), var)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, parse};
    use crate::riccati::make_system;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn free(lambda: &str) -> SchrodingerSystem {
        make_system(&p("0"), &p("1"), &p(lambda), "x").unwrap()
    }

    #[test]
    fn free_particle_minus_certificate() {
        let c = build_certificate_minus(&free("lambda"), &p("sqrt(-lambda)"), None).unwrap();
        assert_eq!(c.zeta_2, Some(normalize(&p("-lambda_root0"))));
        assert_eq!(c.restore(c.zeta_2.as_ref().unwrap()), normalize(&p("-sqrt(-lambda)")));
        assert!(is_zero(&(c.restore(&c.curve.k) + p("zeta+sqrt(-lambda)"))).unwrap().is_zero());
        let r = p("exp(-2*sqrt(-lambda)*x)/(-zeta+sqrt(-lambda))^2");
        assert!(is_zero(&(c.restore(&c.integrating_factor) - r)).unwrap().is_zero());
        let i = p("(-zeta-sqrt(-lambda))/(-zeta+sqrt(-lambda))*exp(-2*sqrt(-lambda)*x)");
        assert!(is_zero(&(c.restore(c.first_integral.as_ref().unwrap()) - i)).unwrap().is_zero());
        assert!(c.checks.iter().all(SymbolicCheck::passed));
    }

    #[test]
    fn integrating_factor_is_inverse_square_of_f_times_f() {
        let sys = make_system(&p("r^4+l*(l+1)-(2*l+3)*r^2"), &p("r^2"), &p("0"), "r").unwrap();
        let c = build_certificate_minus(&sys, &p("(l+1)/r-r"), None).unwrap();
        let ff = c.curve.f.clone() * c.exp_factor.f.clone();
        assert!(normalize(&(c.integrating_factor.clone() - ff.powi(-2))).is_zero_literal());
        assert!(normalize(&(c.exp_factor.f.clone() - p("r^(l+2)*exp(-r^2/2)"))).is_zero_literal());
    }

    #[test]
    fn general_free_particle_solution_closes() {
        let z = p("sqrt(-lambda)*(c1*exp(sqrt(-lambda)*x)-c2*exp(-sqrt(-lambda)*x))/(c1*exp(sqrt(-lambda)*x)+c2*exp(-sqrt(-lambda)*x))");
        let c = build_certificate_minus(&free("lambda"), &z, None).unwrap();
        let f = p("c1*exp(sqrt(-lambda)*x)+c2*exp(-sqrt(-lambda)*x)");
        let ratio = normalize(&(c.restore(&c.exp_factor.f) / f));
        assert!(!ratio.depends_on("x"), "{ratio}");
        assert_eq!(c.membership["f"], Membership::RationalPlusExpLog);
    }

    #[test]
    fn free_particle_plus_certificate() {
        let c = build_certificate_plus(&free("lambda"), &p("1/x"), &p("sqrt(-lambda)"), None).unwrap();
        let z = p("sqrt(-lambda)+1/(sqrt(-lambda)*x^2-x)");
        assert!(is_zero(&(c.restore(&c.zeta_1) - z)).unwrap().is_zero());
        let z2 = p("-sqrt(-lambda)-1/(sqrt(-lambda)*x^2+x)");
        assert!(is_zero(&(c.restore(c.zeta_2.as_ref().unwrap()) - z2)).unwrap().is_zero());
        assert_eq!(c.system.potential, normalize(&p("2/x^2")));
        assert_eq!(c.restore(&c.lambda), normalize(&p("lambda")));
        assert!(c.checks.iter().all(SymbolicCheck::passed));
        assert_eq!(c.field.degree, 4);
    }

    #[test]
    fn plus_certificate_rejects_the_seed_itself() {
        let err = build_certificate_plus(&free("0"), &p("1/x"), &p("1/x"), None).unwrap_err();
        assert!(matches!(err, DkitError::Degenerate(_)));
        let c = build_certificate_plus_seed(&free("0"), &p("1/x")).unwrap();
        assert_eq!(c.zeta_1, normalize(&p("-1/x")));
    }

    #[test]
    fn wrong_zeta_is_rejected() {
        let err = build_certificate_minus(&free("lambda"), &p("x"), None).unwrap_err();
        assert!(matches!(err, DkitError::NotRiccatiSolution { .. }));
    }

    #[test]
    fn second_solutions() {
        assert_eq!(second_solution(&p("sqrt(-lambda)"), "x").unwrap(), normalize(&p("-sqrt(-lambda)")));
        assert!(second_solution(&p("1/x"), "x").unwrap().is_zero_literal());
        let z2 = second_solution(&p("x"), "x").unwrap();
        assert!(z2.has_antideriv());
    }

    #[test]
    fn two_solution_integral_and_swap() {
        let i = first_integral_two_solutions(&p("sqrt(-lambda)"), &p("-sqrt(-lambda)"), "x").unwrap();
        let j = first_integral_two_solutions(&p("-sqrt(-lambda)"), &p("sqrt(-lambda)"), "x").unwrap();
        assert!(is_zero(&(i * j - Expr::one())).unwrap().is_zero());
        assert!(first_integral_two_solutions(&p("1"), &p("1"), "x").is_err());
    }

    #[test]
    fn tangent_solution_gives_a_first_integral() {
        let sys = free("lambda");
        let z1 = p("-sqrt(lambda)*tan(sqrt(lambda)*x)");
        let z2 = second_solution(&z1, "x").unwrap();
        let i = first_integral_two_solutions(&z1, &z2, "x").unwrap();
        let x = build_vector_field(&sys);
        assert!(is_zero(&x.apply(&i)).unwrap().is_zero());
        let shown = p("(zeta*tan(sqrt(lambda)*x)-sqrt(lambda))/((zeta+sqrt(lambda)*tan(sqrt(lambda)*x))*sqrt(lambda))");
        assert!(is_zero(&differentiate(&normalize(&(i / shown)), "x")).unwrap().is_zero());
    }

    #[test]
    fn cross_ratio_is_a_first_integral() {
        let x = build_vector_field(&free("0"));
        let i = rational_first_integral(&p("0"), &p("1/x"), &p("1/(x-1)")).unwrap();
        assert!(is_zero(&x.apply(&i)).unwrap().is_zero());
        assert!(rational_first_integral(&p("0"), &p("0"), &p("1/x")).is_err());
    }

    #[test]
    fn balances() {
        let (k1, l1) = cofactors(&Expr::one(), "x", &p("sqrt(-lambda)"));
        let (k2, l2) = cofactors(&Expr::one(), "x", &p("-sqrt(-lambda)"));
        let v = verify_balance_first_integral(&[(k1.clone(), p("-1")), (k2, p("1")), (l1.clone(), p("-1")), (l2, p("1"))]);
        assert!(v.unwrap().is_zero());
        assert!(verify_balance_first_integral(&[(k1.clone(), p("0"))]).unwrap().is_zero());
        assert!(!verify_balance_first_integral(&[(k1.clone(), p("1"))]).unwrap().is_zero());
        let field = build_vector_field(&free("lambda"));
        assert!(verify_balance_integrating_factor(&[(k1, p("-2")), (l1, p("-2"))], &field).unwrap().is_zero());
        assert!(!verify_balance_integrating_factor(&[], &field).unwrap().is_zero());
    }

    #[test]
    fn memberships() {
        assert_eq!(field_membership(&p("-zeta+(l+1)/r-r")), Membership::Rational);
        assert_eq!(field_membership(&p("exp(-2*sqrt(-lambda)*x)*zeta")), Membership::RationalPlusExpLog);
        let formal = crate::expr::antiderivative(&p("exp(x^2)"), "x").unwrap();
        assert_eq!(field_membership(&(formal + p("zeta"))), Membership::FormalAntiderivative);
    }

    #[test]
    fn classification() {
        let r = classify(&[(p("1/x"), None), (p("0"), None)], "x").unwrap();
        assert_eq!(r.case, Case::OneII);
        let r = classify(&[(p("1/x"), None), (p("0"), None), (p("1/(x-1)"), None)], "x").unwrap();
        assert_eq!(r.case, Case::Three);
        let x = build_vector_field(&free("0"));
        assert!(is_zero(&x.apply(r.first_integral.as_ref().unwrap())).unwrap().is_zero());
        let r = classify(&[(p("sqrt(-lambda)"), Some(Membership::RationalPlusExpLog))], "x").unwrap();
        assert_eq!(r.case, Case::OneII);
        assert_eq!(classify(&[(p("x"), None)], "x").unwrap().case, Case::OneI);
        assert_eq!(classify(&[(p("sqrt(x)"), None)], "x").unwrap().case, Case::Two);
        let r = classify(&[(p("sqrt(-lambda)"), None)], "x").unwrap();
        assert_eq!(r.case, Case::OneII);
        assert_eq!(classify(&[], "x").unwrap().case, Case::Unknown);
    }

    #[test]
    fn darboux_function_matches_its_product() {
        let g = GeneralizedDarbouxFunction {
            factors: vec![(p("1/x"), p("2")), (p("x"), p("-1"))],
            exp_part: p("x^2"),
            power_factors: vec![(p("1"), p("1/2"))],
        };
        let direct = p("(zeta-1/x)^2*(zeta-x)^(-1)*exp(x^2)*(x-1)^(1/2)");
        assert!(is_zero(&(g.to_expr("x") - direct)).unwrap().is_zero());
    }

    #[test]
    fn corrupted_cofactor_breaks_only_its_check() {
        let c = build_certificate_minus(&free("-1"), &p("1"), None).unwrap();
        for obj in ["f", "K", "F", "L", "R", "I"] {
            let bad = c.corrupted(obj).unwrap();
            let failing: Vec<_> =
                bad.symbolic_checks(&Sampler::default()).into_iter().filter(|c| !c.passed()).map(|c| c.name).collect();
            assert_eq!(failing.len(), 1, "{obj}: {failing:?}");
        }
    }
}
