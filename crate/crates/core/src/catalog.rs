//! Worked systems: the free particle, the three-dimensional oscillator, the
//! Coulomb potential and four families reachable by iterated transformations,
//! with seeds, spectra, eigenfunction generators and parameter maps.

use serde::Serialize;

use crate::darboux::PotentialFamily;
use crate::error::{DkitError, Result};
use crate::expr::{differentiate, normalize, parse, poly_coeffs, substitute, Expr};
use crate::riccati::{log_derivative, make_system, system_from_potential, SchrodingerSystem};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 7] = ["free_particle", "oscillator3d", "coulomb", "family_I", "family_II", "family_III", "family_IV"];

fn p(s: &str) -> Expr {
    parse(s).expect("catalog expressions parse")
}

/// Radial problems whose eigenfunctions are `r^{ℓ+1} P_n e^{φ}` with `P_n` a
/// polynomial related to the generalized Laguerre polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Laguerre {
    Oscillator,
    Coulomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    I,
    II,
    III,
    IV,
}

impl std::str::FromStr for FamilyKind {
    type Err = DkitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(FamilyKind::I),
            "II" => Ok(FamilyKind::II),
            "III" => Ok(FamilyKind::III),
            "IV" => Ok(FamilyKind::IV),
            other => Err(DkitError::UnknownEntry(format!("family_{other}"))),
        }
    }
}

/// A closed formula for part of the spectrum, in the level index `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumFormula {
    pub label: String,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub formula: Expr,
    /// Backed by an eigenfunction generator and checked.
    pub verified: bool,
}

/// A solution `ψ` of `Hψ = λψ` shipped with an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownSolution {
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub lambda: Expr,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub psi: Expr,
}

/// A parameter family, its map and the parameter point of the entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMap {
    pub label: String,
    pub family: PotentialFamily,
    pub at: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub var: String,
    pub potential: Expr,
    /// `N` of the polynomial form `V = T/N`; `None` takes the reduced
    /// denominator of `V`.
    pub n: Option<Expr>,
    /// Seed eigenfunction `ψ₀` and its level `λ₁`.
    pub seed: Option<(Expr, Expr)>,
    /// The first map is the one used for shape invariance; any others are
    /// kept for comparison.
    pub maps: Vec<ParameterMap>,
    pub spectrum: Vec<SpectrumFormula>,
    pub known_solutions: Vec<KnownSolution>,
    pub laguerre: Option<(Laguerre, Expr)>,
    pub notes: Vec<String>,
}

impl CatalogEntry {
    /// The system at spectral parameter `lambda`.
    pub fn system(&self, lambda: &Expr) -> Result<SchrodingerSystem> {
        match &self.n {
            Some(n) => make_system(&normalize(&(self.potential.clone() * n.clone())), n, lambda, &self.var),
            None => system_from_potential(&self.potential, lambda, &self.var),
        }
    }

    pub fn zeta0(&self) -> Option<Expr> {
        self.seed.as_ref().and_then(|(psi, _)| log_derivative(psi, &self.var).ok())
    }

    /// `λ_n` from the verified spectrum formula.
    pub fn eigenvalue(&self, n: u32) -> Option<Expr> {
        let (kind, ell) = self.laguerre.as_ref()?;
        Some(eigenvalue(*kind, n, ell))
    }

    /// `ψ_n` from the Laguerre-related generator.
    pub fn eigenfunction(&self, n: u32) -> Result<Expr> {
        let (kind, ell) = self
            .laguerre
            .as_ref()
            .ok_or_else(|| DkitError::Invalid(format!("{} has no eigenfunction generator", self.name)))?;
        eigenfunction(*kind, n, ell)
    }

    /// Seeds `(ψ, 0)` for `depth` successive transformations of a family I
    /// potential: `(bx+c)^n, (bx+c)^{n+1}, ...`.
    pub fn seed_chain(&self, depth: usize) -> Result<Vec<(Expr, Expr)>> {
        if self.name != "family_I" {
            return Err(DkitError::Invalid(format!("{} has no seed chain", self.name)));
        }
        let map = &self.maps[0];
        let mut at = map.at.clone();
        let mut out = Vec::with_capacity(depth);
        for _ in 0..depth {
            let b = family_binding(&map.family, &at);
            out.push((substitute(&p("(b*x+c)^n"), &b), Expr::zero()));
            at = map.family.image(&at)?;
        }
        Ok(out)
    }

    pub fn summary(&self) -> EntrySummary {
        EntrySummary {
            name: self.name.clone(),
            variable: self.var.clone(),
            potential: self.potential.to_string(),
            seed_psi: self.seed.as_ref().map(|(psi, _)| psi.to_string()),
            seed_lambda: self.seed.as_ref().map(|(_, l)| l.to_string()),
            zeta0: self.zeta0().map(|z| z.to_string()),
            spectrum: self.spectrum.clone(),
            parameter_maps: self
                .maps
                .iter()
                .map(|m| MapSummary {
                    label: m.label.clone(),
                    template: m.family.template.to_string(),
                    params: m.family.params.clone(),
                    map: m.family.map.iter().map(Expr::to_string).collect(),
                    at: m.at.iter().map(Expr::to_string).collect(),
                })
                .collect(),
            known_solutions: self.known_solutions.clone(),
            notes: self.notes.clone(),
        }
    }
}

fn family_binding(family: &PotentialFamily, at: &[Expr]) -> Vec<(String, Expr)> {
    family.params.iter().cloned().zip(at.iter().cloned()).collect()
}

/// Serializable view of an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntrySummary {
    pub name: String,
    pub variable: String,
    pub potential: String,
    pub seed_psi: Option<String>,
    pub seed_lambda: Option<String>,
    pub zeta0: Option<String>,
    pub spectrum: Vec<SpectrumFormula>,
    pub parameter_maps: Vec<MapSummary>,
    pub known_solutions: Vec<KnownSolution>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSummary {
    pub label: String,
    pub template: String,
    pub params: Vec<String>,
    pub map: Vec<String>,
    pub at: Vec<String>,
}

/// `V = 0` in `x`, seed `ψ₀ = x` at `λ₁ = 0`.
pub fn free_particle() -> CatalogEntry {
    let family = PotentialFamily::new(Expr::zero(), &[], vec![]).expect("arity matches");
    let known = ["exp(sqrt(-lambda)*x)", "exp(-sqrt(-lambda)*x)", "cos(sqrt(lambda)*x)", "sin(sqrt(lambda)*x)"];
    CatalogEntry {
        name: "free_particle".into(),
        var: "x".into(),
        potential: Expr::zero(),
        n: Some(Expr::one()),
        seed: Some((p("x"), Expr::zero())),
        maps: vec![ParameterMap { label: "trivial family".into(), family, at: vec![] }],
        spectrum: vec![SpectrumFormula { label: "every complex lambda".into(), formula: p("lambda"), verified: true }],
        known_solutions: known.iter().map(|s| KnownSolution { lambda: p("lambda"), psi: p(s) }).collect(),
        laguerre: None,
        notes: vec!["Not shape invariant: the transform 2/x^2 is not a member of the trivial family.".into()],
    }
}

fn oscillator_template() -> Expr {
    p("r^2+l*(l+1)/r^2-(2*l+3)")
}

/// `V = r² + ℓ(ℓ+1)/r² - (2ℓ+3)`, seed `r^{ℓ+1} e^{-r²/2}` at `λ₁ = 0`,
/// `λ_n = 4n`, shape invariant under `ℓ ↦ ℓ+1` with `R = 4`.
pub fn oscillator3d(ell: &Expr) -> CatalogEntry {
    let ell = normalize(ell);
    let at = [("l".to_string(), ell.clone())];
    let family = PotentialFamily::new(oscillator_template(), &["l"], vec![p("l+1")]).expect("arity matches");
    CatalogEntry {
        name: "oscillator3d".into(),
        var: "r".into(),
        potential: substitute(&oscillator_template(), &at),
        n: Some(p("r^2")),
        seed: Some((substitute(&p("r^(l+1)*exp(-r^2/2)"), &at), Expr::zero())),
        maps: vec![ParameterMap { label: "l -> l+1".into(), family, at: vec![ell.clone()] }],
        spectrum: vec![SpectrumFormula { label: "lambda_n".into(), formula: p("4*n"), verified: true }],
        known_solutions: vec![],
        laguerre: Some((Laguerre::Oscillator, ell)),
        notes: vec!["Eigenfunctions r^(l+1) P_n exp(-r^2/2) with P_n monic of degree n in r^2.".into()],
    }
}

fn coulomb_template() -> Expr {
    p("l*(l+1)/r^2-2*(l+1)/r+1")
}

/// `V = ℓ(ℓ+1)/r² - 2(ℓ+1)/r + 1`, seed `r^{ℓ+1} e^{-r}` at `λ₁ = 0`.
/// Carries the one-parameter map `ℓ ↦ ℓ+1` and the two-parameter map
/// `(a, b) ↦ (a+1, b)` on `a(a+1)/r² - 2b/r + 1`.
pub fn coulomb(ell: &Expr) -> CatalogEntry {
    let ell = normalize(ell);
    let at = [("l".to_string(), ell.clone())];
    let naive = PotentialFamily::new(coulomb_template(), &["l"], vec![p("l+1")]).expect("arity matches");
    let two = PotentialFamily::new(p("a*(a+1)/r^2-2*b/r+1"), &["a", "b"], vec![p("a+1"), p("b")]).expect("arity matches");
    CatalogEntry {
        name: "coulomb".into(),
        var: "r".into(),
        potential: substitute(&coulomb_template(), &at),
        n: Some(p("r^2")),
        seed: Some((substitute(&p("r^(l+1)*exp(-r)"), &at), Expr::zero())),
        maps: vec![
            ParameterMap { label: "(a, b) -> (a+1, b)".into(), family: two, at: vec![ell.clone(), normalize(&(ell.clone() + Expr::one()))] },
            ParameterMap { label: "l -> l+1".into(), family: naive, at: vec![ell.clone()] },
        ],
        spectrum: vec![
            SpectrumFormula { label: "lambda_n".into(), formula: substitute(&p("1-((l+1)/(l+1+n))^2"), &at), verified: true },
            SpectrumFormula { label: "second branch".into(), formula: substitute(&p("1-((l+1)/(l-n))^2"), &at), verified: false },
        ],
        known_solutions: vec![],
        laguerre: Some((Laguerre::Coulomb, ell)),
        notes: vec![
            "Eigenfunctions r^(l+1) P_n exp(-(l+1) r/(l+1+n)) with P_n monic of degree n.".into(),
            "The second spectrum branch has no eigenfunction generator and is unverified.".into(),
            "Under l -> l+1 the remainder is 2/r, not a constant; under (a, b) -> (a+1, b) it is 0.".into(),
        ],
    }
}

fn family_template(kind: FamilyKind) -> (Expr, &'static [&'static str]) {
    match kind {
        FamilyKind::I => (p("n*(n-1)*b^2/(b*x+c)^2"), &["b", "c", "n"]),
        FamilyKind::II => (
            p("m^2*n*(n-1)*(b^2-a^2)/(a*(exp(m*x)+exp(-m*x))/2+b*(exp(m*x)-exp(-m*x))/2)^2"),
            &["a", "b", "m", "n"],
        ),
        FamilyKind::III => (p("-4*a*b*m^2*n*(n-1)/(a*exp(m*x)+b*exp(-m*x))^2"), &["a", "b", "m", "n"]),
        FamilyKind::IV => (p("m^2*n*(n-1)*(b^2+a^2)/(a*cos(m*x)+b*sin(m*x))^2"), &["a", "b", "m", "n"]),
    }
}

/// One of the families reachable from `V = 0` by iterated transformations.
/// Parameters not given in `values` stay symbolic. Family I carries the seed
/// chain `(bx+c)^n`; the others are templates only.
pub fn iterated_family(kind: FamilyKind, values: &[(String, Expr)]) -> Result<CatalogEntry> {
    let (template, params) = family_template(kind);
    for (name, _) in values {
        if !params.contains(&name.as_str()) {
            return Err(DkitError::Invalid(format!("family_{kind:?} has no parameter `{name}`")));
        }
    }
    let at: Vec<Expr> = params
        .iter()
        .map(|name| values.iter().find(|(k, _)| k == name).map(|(_, v)| normalize(v)).unwrap_or_else(|| Expr::param(name)))
        .collect();
    let map: Vec<Expr> = params.iter().map(|&name| if name == "n" { p("n+1") } else { Expr::param(name) }).collect();
    let family = PotentialFamily::new(template.clone(), params, map)?;
    let binding = family_binding(&family, &at);
    let seed = (kind == FamilyKind::I).then(|| (substitute(&p("(b*x+c)^n"), &binding), Expr::zero()));
    let mut notes = Vec::new();
    if kind == FamilyKind::I {
        notes.push("With b = 1, n = l+1, c = 0 and x = r this is the centrifugal term l(l+1)/r^2.".into());
    } else {
        notes.push("Template only: no seed chain is shipped for this family.".into());
    }
    Ok(CatalogEntry {
        name: format!("family_{kind:?}"),
        var: "x".into(),
        potential: family.instantiate(&at)?,
        n: None,
        seed,
        maps: vec![ParameterMap { label: "n -> n+1".into(), family, at }],
        spectrum: vec![],
        known_solutions: vec![],
        laguerre: None,
        notes,
    })
}

/// Looks an entry up by name. `ell` applies to the radial entries and
/// defaults to the symbol `l`.
pub fn by_name(name: &str, ell: Option<&Expr>) -> Result<CatalogEntry> {
    let ell = ell.cloned().unwrap_or_else(|| Expr::param("l"));
    match name {
        "free_particle" => Ok(free_particle()),
        "oscillator3d" => Ok(oscillator3d(&ell)),
        "coulomb" => Ok(coulomb(&ell)),
        _ => match name.strip_prefix("family_") {
            Some(kind) => iterated_family(kind.parse()?, &[]),
            None => Err(DkitError::UnknownEntry(name.to_string())),
        },
    }
}

/// `λ_n` of the radial problem.
pub fn eigenvalue(kind: Laguerre, n: u32, ell: &Expr) -> Expr {
    let n = Expr::num(n as i64);
    match kind {
        Laguerre::Oscillator => normalize(&(Expr::num(4) * n)),
        Laguerre::Coulomb => {
            let a = ell.clone() + Expr::one();
            normalize(&(Expr::one() - (a.clone() / (a + n)).powi(2)))
        }
    }
}

/// Exponent `φ` in `ψ_n = r^{ℓ+1} P_n e^{φ}`.
fn exponent(kind: Laguerre, n: u32, ell: &Expr) -> Expr {
    let r = Expr::var("r");
    match kind {
        Laguerre::Oscillator => normalize(&(-(r.clone() * r) / Expr::num(2))),
        Laguerre::Coulomb => {
            let a = ell.clone() + Expr::one();
            normalize(&(-(a.clone() * r) / (a + Expr::num(n as i64))))
        }
    }
}

fn radial_potential(kind: Laguerre, ell: &Expr) -> Expr {
    let t = match kind {
        Laguerre::Oscillator => oscillator_template(),
        Laguerre::Coulomb => coulomb_template(),
    };
    substitute(&t, &[("l".into(), ell.clone())])
}

/// The monic polynomial `P_n` with `H(r^{ℓ+1} P_n e^{φ}) = λ_n
/// r^{ℓ+1} P_n e^{φ}`. The coefficients come from an exact linear solve; an
/// inconsistent system means `λ_n` is not an eigenvalue.
pub fn laguerre_related(n: u32, ell: &Expr, kind: Laguerre) -> Result<Expr> {
    laguerre_at_level(n, ell, kind, &eigenvalue(kind, n, ell))
}

/// Degree of `P_n` in `r`: `n` for Coulomb, `2n` for the oscillator, whose
/// `P_n` is a polynomial of degree `n` in `r²`.
pub fn laguerre_degree(kind: Laguerre, n: u32) -> u32 {
    match kind {
        Laguerre::Oscillator => 2 * n,
        Laguerre::Coulomb => n,
    }
}

fn laguerre_at_level(n: u32, ell: &Expr, kind: Laguerre, lambda: &Expr) -> Result<Expr> {
    let r = Expr::var("r");
    let d = laguerre_degree(kind, n);
    let unknowns: Vec<String> = (0..d).map(|k| format!("laguerre_c{k}")).collect();
    let poly = Expr::add(
        (0..=d)
            .map(|k| {
                let c = if k == d { Expr::one() } else { Expr::param(&unknowns[k as usize]) };
                c * r.clone().powi(k as i64)
            })
            .collect(),
    );
    // With ψ = e^g P: -ψ''/e^g + (V - λ)P = -P'' - 2g'P' + (V - λ - g'' - g'²)P.
    let g = (ell.clone() + Expr::one()) * r.clone().ln() + exponent(kind, n, ell);
    let dg = differentiate(&g, "r");
    let d2g = differentiate(&dg, "r");
    let dp = differentiate(&poly, "r");
    let d2p = differentiate(&dp, "r");
    let v = radial_potential(kind, ell);
    let residual = -d2p - Expr::num(2) * dg.clone() * dp + (v - lambda.clone() - d2g - dg.clone() * dg) * poly.clone();
    let cleared = normalize(&(residual * r.clone().powi(2)));
    let equations =
        poly_coeffs(&cleared, "r").ok_or_else(|| DkitError::Invalid("eigenvalue equation is not polynomial in r".into()))?;

    // Affine coefficients: equation = Σ_j a_j c_j + b.
    let zeros: Vec<(String, Expr)> = unknowns.iter().map(|u| (u.clone(), Expr::zero())).collect();
    let mut rows: Vec<(Vec<Expr>, Expr)> = Vec::new();
    for eq in &equations {
        let b = substitute(eq, &zeros);
        let a: Vec<Expr> = unknowns
            .iter()
            .map(|u| {
                let mut at = zeros.clone();
                at.iter_mut().find(|(k, _)| k == u).unwrap().1 = Expr::one();
                normalize(&(substitute(eq, &at) - b.clone()))
            })
            .collect();
        rows.push((a, normalize(&-b)));
    }
    let solution = solve_exact(rows, unknowns.len())
        .ok_or_else(|| DkitError::Invalid(format!("no polynomial P_{n}: the eigenvalue equation is inconsistent")))?;
    let bindings: Vec<(String, Expr)> = unknowns.into_iter().zip(solution).collect();
    Ok(substitute(&poly, &bindings))
}

/// Gaussian elimination on `Σ a_j c_j = b` over normalized expressions.
/// Returns `None` when the system is inconsistent or underdetermined.
fn solve_exact(mut rows: Vec<(Vec<Expr>, Expr)>, unknowns: usize) -> Option<Vec<Expr>> {
    let mut pivots = Vec::new();
    let mut next_row = 0;
    for col in 0..unknowns {
        let pivot = (next_row..rows.len()).find(|&i| !rows[i].0[col].is_zero_literal())?;
        rows.swap(next_row, pivot);
        let (prow, pb) = rows[next_row].clone();
        let inv = prow[col].clone().recip();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == next_row || row.0[col].is_zero_literal() {
                continue;
            }
            let factor = normalize(&(row.0[col].clone() * inv.clone()));
            for j in 0..unknowns {
                row.0[j] = normalize(&(row.0[j].clone() - factor.clone() * prow[j].clone()));
            }
            row.1 = normalize(&(row.1.clone() - factor * pb.clone()));
        }
        pivots.push(next_row);
        next_row += 1;
    }
    if rows[next_row..].iter().any(|(_, b)| !b.is_zero_literal()) {
        return None;
    }
    Some(
        pivots
            .iter()
            .enumerate()
            .map(|(col, &row)| normalize(&(rows[row].1.clone() / rows[row].0[col].clone())))
            .collect(),
    )
}

/// `ψ_n = r^{ℓ+1} P_n e^{φ}`.
pub fn eigenfunction(kind: Laguerre, n: u32, ell: &Expr) -> Result<Expr> {
    let pn = laguerre_related(n, ell, kind)?;
    let r = Expr::var("r");
    Ok(normalize(&(Expr::pow(r, ell.clone() + Expr::one()) * pn * exponent(kind, n, ell).exp())))
}
