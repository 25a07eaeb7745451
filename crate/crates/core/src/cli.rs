//! Batch front end behind the `dkit` binary. Commands read a TOML manifest
//! (grammar in `docs/manifest.md`) and print text or, with `--json`, JSON.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails, 2 on
//! input or usage errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{self, CatalogEntry};
use crate::darboux::{darboux_transform, shape_invariance_check, ShapeInvariance};
use crate::error::DkitError;
use crate::expr::{is_variable_name, is_zero_with, normalize, parse, substitute, Expr, Sampler, C64};
use crate::integrability::{
    build_certificate_minus_with, build_certificate_plus_seed_with, build_certificate_plus_with, classify,
    ClassificationReport, IntegrabilityCertificate,
};
use crate::riccati::{build_vector_field, log_derivative, make_system, riccati_reduce, SchrodingerSystem, Side};
use crate::verifier::{
    conserve_along_flow, run_certificate_suite, seed_hex, FlowSpec, SuiteOptions, VerificationReport, ARTIFACT_VERSION,
};

pub const DEFAULT_SEED: u64 = 0xDA2B0;
pub const SEED_ENV: &str = "DKIT_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "dkit", version, about = "Darboux transformations and integrability certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// Manifest file.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Sampler seed in hex; falls back to the manifest, then DKIT_SEED.
    #[arg(long, global = true, value_name = "HEX", value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub json: bool,
    /// Zero every runtime field.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Zero-test tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    /// Certificate object to corrupt, `[minus.|plus.]f|K|F|L|R|I`.
    #[arg(long, global = true, value_name = "OBJECT")]
    pub corrupt: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List or show catalog entries.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Transform the system and its solutions.
    Transform,
    /// Build certificates and run every check.
    Certify,
    /// Classify the first integrals a solution list provides.
    Classify,
    /// Conservation drift of first integrals along flows.
    Flow,
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    List,
    Show {
        name: String,
        /// Value for the angular momentum `l`.
        #[arg(long)]
        ell: Option<String>,
    },
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| format!("invalid hex seed `{s}`: {e}"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dkit(#[from] DkitError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Dkit(DkitError::CheckFailed { .. }) => EXIT_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Manifest(msg.into())
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Complex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Complex> for C64 {
    fn from(c: Complex) -> C64 {
        match c {
            Complex::Real(re) => C64::new(re, 0.0),
            Complex::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Independent variable, `x` or `r`.
    pub var: Option<String>,
    /// Hex sampler seed.
    pub seed: Option<String>,
    /// Zero-test tolerance.
    pub tolerance: Option<f64>,
    /// JSON output is also written here, relative to the manifest.
    pub output: Option<PathBuf>,
    /// Substituted into every expression of the manifest.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub system: SystemSection,
    pub transform: Option<TransformSection>,
    pub certify: Option<CertifySection>,
    pub classify: Option<ClassifySection>,
    #[serde(default)]
    pub flows: Vec<FlowSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub catalog: Option<String>,
    pub ell: Option<String>,
    #[serde(rename = "T")]
    pub t: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<String>,
    pub potential: Option<String>,
    /// Spectral parameter, `lambda` when absent.
    pub lambda: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    pub psi0: Option<String>,
    pub lambda1: Option<String>,
    #[serde(default)]
    pub solutions: Vec<SolutionEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionEntry {
    pub lambda: String,
    pub psi: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub sides: Option<Vec<Side>>,
    /// Riccati solution at the system's `λ`.
    pub zeta: Option<String>,
    pub zeta2: Option<String>,
    /// Catalog level `n`: sets `λ = λ_n` and `ζ = (ln ψ_n)'`.
    pub level: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub solutions: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub span: [f64; 2],
    pub psi0: Complex,
    pub dpsi0: Complex,
    /// Numeric values for parameters left symbolic elsewhere.
    #[serde(default)]
    pub bind: BTreeMap<String, String>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub drift_tol: Option<f64>,
    /// Relative tolerances for the drift table of `dkit flow`.
    pub rel_tols: Option<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Side {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "minus" => Ok(Side::Minus),
            "plus" => Ok(Side::Plus),
            other => Err(serde::de::Error::custom(format!("unknown side `{other}`, expected minus or plus"))),
        }
    }
}

impl Manifest {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| schema(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }
}

/// Manifest with parsed expressions and parameters substituted.
struct Session {
    var: String,
    params: Vec<(String, Expr)>,
    entry: Option<CatalogEntry>,
    system: SchrodingerSystem,
    sampler: Sampler,
    deterministic: bool,
}

impl Session {
    fn expr(&self, key: &str, text: &str) -> CliResult<Expr> {
        Ok(self.bind(&parse_key(key, text)?))
    }

    fn bind(&self, e: &Expr) -> Expr {
        if self.params.is_empty() {
            e.clone()
        } else {
            normalize(&substitute(e, &self.params))
        }
    }

    /// `(ψ₀, λ₁)` from the manifest, else from the catalog entry.
    fn seed(&self, m: &Manifest) -> CliResult<(Expr, Expr)> {
        let t = m.transform.clone().unwrap_or_default();
        let from_entry = self.entry.as_ref().and_then(|e| e.seed.clone());
        let psi0 = match (&t.psi0, &from_entry) {
            (Some(s), _) => self.expr("transform.psi0", s)?,
            (None, Some((psi, _))) => self.bind(psi),
            (None, None) => return Err(schema("missing transform.psi0 (the system has no catalog seed)")),
        };
        let lambda1 = match (&t.lambda1, &from_entry) {
            (Some(s), _) => self.expr("transform.lambda1", s)?,
            (None, Some((_, l))) if t.psi0.is_none() => self.bind(l),
            _ => Expr::zero(),
        };
        Ok((psi0, lambda1))
    }
}

fn parse_key(key: &str, text: &str) -> CliResult<Expr> {
    parse(text).map_err(|e| schema(format!("{key}: {e}")))
}

fn open_session(m: &Manifest, opts: &GlobalOpts, env_seed: Option<&str>) -> CliResult<Session> {
    let mut params = Vec::new();
    for (name, value) in &m.params {
        if is_variable_name(name) {
            return Err(schema(format!("params.{name}: `{name}` is a variable, not a parameter")));
        }
        params.push((name.clone(), parse_key(&format!("params.{name}"), value)?));
    }
    let seed = match (opts.seed, &m.seed, env_seed) {
        (Some(s), _, _) => s,
        (None, Some(s), _) => parse_seed(s).map_err(|e| schema(format!("seed: {e}")))?,
        (None, None, Some(s)) => parse_seed(s).map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}")))?,
        (None, None, None) => DEFAULT_SEED,
    };
    let mut sampler = Sampler::with_seed(seed);
    if let Some(tol) = opts.tol.or(m.tolerance) {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
        }
        sampler = sampler.with_tol(tol);
    }
    let mut session = Session {
        var: String::new(),
        params,
        entry: None,
        system: make_system(&Expr::zero(), &Expr::one(), &Expr::zero(), "x")?,
        sampler,
        deterministic: opts.deterministic,
    };
    let s = &m.system;
    let inline = s.t.is_some() || s.n.is_some() || s.potential.is_some();
    let entry = match (&s.catalog, inline) {
        (Some(_), true) => return Err(schema("system: give either catalog or T/N/potential, not both")),
        (None, false) => return Err(schema("system: missing catalog or T/N/potential")),
        (Some(name), false) => {
            let ell = s.ell.as_deref().map(|e| parse_key("system.ell", e)).transpose()?;
            Some(catalog::by_name(name, ell.as_ref())?)
        }
        (None, true) => {
            if s.ell.is_some() {
                return Err(schema("system.ell only applies to catalog entries"));
            }
            None
        }
    };
    let var = match (&m.var, &entry) {
        (Some(v), _) => v.clone(),
        (None, Some(e)) => e.var.clone(),
        (None, None) => "x".to_string(),
    };
    if var == crate::expr::ZETA || !is_variable_name(&var) {
        return Err(schema(format!("var: `{var}` is not an independent variable (use x or r)")));
    }
    if let Some(e) = &entry {
        if e.var != var {
            return Err(schema(format!("var: catalog entry {} is in `{}`", e.name, e.var)));
        }
    }
    session.var = var.clone();
    let lambda = session.expr("system.lambda", s.lambda.as_deref().unwrap_or("lambda"))?;
    let (t, n) = match (&entry, &s.potential, &s.t, &s.n) {
        (Some(e), ..) => (session.bind(&e.potential), Expr::one()),
        (None, Some(v), None, None) => (session.expr("system.potential", v)?, Expr::one()),
        (None, None, t, n) => (
            session.expr("system.T", t.as_deref().unwrap_or("0"))?,
            session.expr("system.N", n.as_deref().unwrap_or("1"))?,
        ),
        _ => return Err(schema("system: give either potential or T/N")),
    };
    session.system = match &entry {
        Some(_) => crate::riccati::system_from_potential(&t, &lambda, &var)?,
        None if s.potential.is_some() => crate::riccati::system_from_potential(&t, &lambda, &var)?,
        None => make_system(&t, &n, &lambda, &var)?,
    };
    session.entry = entry;
    Ok(session)
}

/// Runs `dkit` with explicit arguments and streams. Returns the exit code.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, env_seed, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "dkit: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary.
pub fn main_entry() -> u8 {
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), env_seed.as_deref(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: &Cli, env_seed: Option<&str>, out: &mut dyn Write) -> CliResult<u8> {
    let opts = &cli.opts;
    if let Command::Catalog { action } = &cli.command {
        return cmd_catalog(action, opts, out);
    }
    let path = opts.manifest.as_ref().ok_or_else(|| CliError::Usage("--manifest FILE is required".into()))?;
    let manifest = Manifest::load(path)?;
    if opts.corrupt.is_some() && !matches!(cli.command, Command::Certify) {
        return Err(CliError::Usage("--corrupt only applies to certify".into()));
    }
    let (json, text, code) = match cli.command {
        Command::Transform => {
            let t = cmd_transform(&manifest, opts, env_seed)?;
            (to_json(&t), t.to_text(), EXIT_OK)
        }
        Command::Certify => {
            let report = cmd_certify(&manifest, opts, env_seed)?;
            let code = if report.passed() { EXIT_OK } else { EXIT_FAILED };
            (report.to_json(), report_text(&report), code)
        }
        Command::Classify => {
            let c = cmd_classify(&manifest, opts, env_seed)?;
            (to_json(&c), c.to_text(), EXIT_OK)
        }
        Command::Flow => {
            let table = cmd_flow(&manifest, opts, env_seed)?;
            let code = if table.rows.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_FAILED };
            (to_json(&table), table.to_text(), code)
        }
        Command::Catalog { .. } => unreachable!("handled above"),
    };
    if let Some(rel) = &manifest.output {
        let target = path.parent().map(|d| d.join(rel)).unwrap_or_else(|| rel.clone());
        std::fs::write(&target, format!("{json}\n")).map_err(|source| CliError::Io { path: target, source })?;
    }
    let shown = if opts.json { json } else { text };
    write_out(out, &shown)?;
    Ok(code)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("outputs serialize")
}

/// A closed pipe downstream is not an error.
fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn cmd_catalog(action: &CatalogAction, opts: &GlobalOpts, out: &mut dyn Write) -> CliResult<u8> {
    match action {
        CatalogAction::List => {
            let text = if opts.json {
                to_json(&catalog::NAMES)
            } else {
                catalog::NAMES.join("\n")
            };
            write_out(out, &text)?;
        }
        CatalogAction::Show { name, ell } => {
            let ell = ell.as_deref().map(|e| parse_key("--ell", e)).transpose()?;
            let entry = catalog::by_name(name, ell.as_ref())?;
            let summary = entry.summary();
            let text = if opts.json {
                to_json(&summary)
            } else {
                let mut lines = vec![
                    format!("name: {}", summary.name),
                    format!("variable: {}", summary.variable),
                    format!("potential: {}", summary.potential),
                ];
                if let (Some(psi), Some(l)) = (&summary.seed_psi, &summary.seed_lambda) {
                    lines.push(format!("seed: psi0 = {psi} at lambda1 = {l}"));
                }
                for s in &summary.spectrum {
                    let tag = if s.verified { "" } else { " (unverified)" };
                    lines.push(format!("spectrum {}: {}{tag}", s.label, s.formula));
                }
                for m in &summary.parameter_maps {
                    lines.push(format!("map {}: {} with ({}) -> ({})", m.label, m.template, m.params.join(", "), m.map.join(", ")));
                }
                for k in &summary.known_solutions {
                    lines.push(format!("solution at lambda = {}: {}", k.lambda, k.psi));
                }
                lines.extend(summary.notes.iter().map(|n| format!("note: {n}")));
                lines.join("\n")
            };
            write_out(out, &text)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformOutput {
    pub var: String,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub v_minus: Expr,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub v_plus: Expr,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub seed_psi0: Expr,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub seed_lambda: Expr,
    #[serde(serialize_with = "crate::report::serialize_expr")]
    pub seed_zeta0: Expr,
    pub transformed_solutions: Vec<catalog::KnownSolution>,
    pub strong_isogaloisian: bool,
    pub shape_invariance: Option<ShapeInvariance>,
}

impl TransformOutput {
    fn to_text(&self) -> String {
        let mut lines = vec![
            format!("V- = {}", self.v_minus),
            format!("V+ = {}", self.v_plus),
            format!("seed: psi0 = {} at lambda1 = {}, zeta0 = {}", self.seed_psi0, self.seed_lambda, self.seed_zeta0),
        ];
        for s in &self.transformed_solutions {
            lines.push(format!("psi+ at lambda = {}: {}", s.lambda, s.psi));
        }
        lines.push(format!("strong isogaloisian: {}", self.strong_isogaloisian));
        match &self.shape_invariance {
            Some(si) => lines.push(format!("shape invariant: {} (remainder {})", si.invariant, si.remainder)),
            None => lines.push("shape invariance: no parameter family".into()),
        }
        lines.join("\n")
    }
}

pub fn cmd_transform(m: &Manifest, opts: &GlobalOpts, env_seed: Option<&str>) -> CliResult<TransformOutput> {
    let s = open_session(m, opts, env_seed)?;
    let (psi0, lambda1) = s.seed(m)?;
    let mut solutions = Vec::new();
    for (k, sol) in m.transform.iter().flat_map(|t| t.solutions.iter()).enumerate() {
        solutions.push((
            s.expr(&format!("transform.solutions[{k}].lambda"), &sol.lambda)?,
            s.expr(&format!("transform.solutions[{k}].psi"), &sol.psi)?,
        ));
    }
    let v_minus = s.system.potential.clone();
    let r = darboux_transform(&v_minus, &psi0, &lambda1, &solutions, &s.var, false)?;
    let shape_invariance = match s.entry.as_ref().and_then(|e| e.maps.first()) {
        Some(map) => {
            let at: Vec<Expr> = map.at.iter().map(|a| s.bind(a)).collect();
            Some(shape_invariance_check(&map.family, &at, &psi0, &lambda1, &s.var)?)
        }
        None => None,
    };
    Ok(TransformOutput {
        var: s.var.clone(),
        v_minus,
        v_plus: r.v_plus,
        seed_psi0: psi0,
        seed_lambda: r.seed_lambda,
        seed_zeta0: r.seed_zeta0,
        transformed_solutions: r
            .transformed_solutions
            .into_iter()
            .map(|(lambda, psi)| catalog::KnownSolution { lambda, psi })
            .collect(),
        strong_isogaloisian: r.strong_isogaloisian,
        shape_invariance,
    })
}

/// Builds the requested certificates, minus side first.
fn certificates(m: &Manifest, s: &Session) -> CliResult<Vec<IntegrabilityCertificate>> {
    let c = m.certify.clone().ok_or_else(|| schema("missing [certify] section"))?;
    let (sys, zeta) = match (c.level, &c.zeta) {
        (Some(_), Some(_)) => return Err(schema("certify: give either level or zeta, not both")),
        (None, None) => return Err(schema("certify: missing zeta (or level for catalog entries)")),
        (None, Some(z)) => (s.system.clone(), s.expr("certify.zeta", z)?),
        (Some(n), None) => {
            let entry = s.entry.as_ref().ok_or_else(|| schema("certify.level needs a catalog system"))?;
            let lambda = entry.eigenvalue(n).ok_or_else(|| schema(format!("certify.level: {} has no spectrum generator", entry.name)))?;
            let psi = s.bind(&entry.eigenfunction(n)?);
            (s.system.with_lambda(&s.bind(&lambda)), log_derivative(&psi, &s.var)?)
        }
    };
    let zeta2 = c.zeta2.as_deref().map(|z| s.expr("certify.zeta2", z)).transpose()?;
    let mut sides = c.sides.unwrap_or_else(|| vec![Side::Minus, Side::Plus]);
    sides.sort();
    sides.dedup();
    let mut out = Vec::new();
    for side in sides {
        let cert = match side {
            Side::Minus => build_certificate_minus_with(&sys, &zeta, zeta2.as_ref(), &s.sampler)?,
            Side::Plus => {
                let (psi0, lambda1) = s.seed(m)?;
                let zeta0 = log_derivative(&psi0, &s.var)?;
                if normalize(&(sys.lambda.clone() - lambda1)).is_zero_literal() {
                    build_certificate_plus_seed_with(&sys, &zeta0, &s.sampler)?
                } else {
                    build_certificate_plus_with(&sys, &zeta0, &zeta, zeta2.as_ref(), &s.sampler)?
                }
            }
        };
        out.push(cert);
    }
    Ok(out)
}

fn flow_specs(m: &Manifest, s: &Session, cert: &IntegrabilityCertificate) -> CliResult<Vec<FlowSpec>> {
    let system = cert.restored_system()?;
    let mut specs = Vec::new();
    for (k, f) in m.flows.iter().enumerate() {
        let mut bindings = Vec::new();
        for (name, value) in &f.bind {
            bindings.push((name.clone(), s.expr(&format!("flows[{k}].bind.{name}"), value)?));
        }
        let mut spec = FlowSpec::new(system.clone(), (f.span[0], f.span[1]), f.psi0.into(), f.dpsi0.into())
            .with_bindings(bindings);
        if let Some(t) = f.rel_tol {
            spec = spec.with_rel_tol(t);
        }
        if let Some(t) = f.abs_tol {
            spec.control.abs_tol = t;
        }
        if let Some(t) = f.drift_tol {
            spec = spec.with_drift_tol(t);
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// `side.object` or `object`, which means the minus side.
fn corruption_target(spec: &str) -> CliResult<(Side, &str)> {
    let (side, object) = match spec.split_once('.') {
        Some(("minus", o)) => (Side::Minus, o),
        Some(("plus", o)) => (Side::Plus, o),
        Some(_) => return Err(CliError::Usage(format!("--corrupt: unknown side in `{spec}`"))),
        None => (Side::Minus, spec),
    };
    if !["f", "K", "F", "L", "R", "I"].contains(&object) {
        return Err(CliError::Usage(format!("--corrupt: unknown object `{object}` (expected f, K, F, L, R or I)")));
    }
    Ok((side, object))
}

pub fn cmd_certify(m: &Manifest, opts: &GlobalOpts, env_seed: Option<&str>) -> CliResult<VerificationReport> {
    let s = open_session(m, opts, env_seed)?;
    let target = opts.corrupt.as_deref().map(corruption_target).transpose()?;
    let certs = certificates(m, &s)?;
    if let Some((side, _)) = target {
        if !certs.iter().any(|c| c.side == side) {
            return Err(CliError::Usage(format!("--corrupt: no {side} certificate requested")));
        }
    }
    let suite = SuiteOptions { sampler: s.sampler.clone(), deterministic: s.deterministic };
    let mut report = VerificationReport::new(s.sampler.seed);
    for cert in certs {
        let cert = match target {
            Some((side, object)) if side == cert.side => cert.corrupted(object)?,
            _ => cert,
        };
        let flows = flow_specs(m, &s, &cert)?;
        report.merge(run_certificate_suite(&cert, &flows, &suite));
    }
    Ok(report)
}

fn report_text(r: &VerificationReport) -> String {
    let mut lines = Vec::new();
    for c in &r.checks {
        let verdict = serde_json::to_value(c.verdict).expect("verdicts serialize");
        let residual = c.residual.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let mut line = format!("{:<5} {:<44} residual {residual}", verdict.as_str().unwrap_or("?"), c.name);
        if let Some(msg) = &c.message {
            line.push_str(&format!("  ({msg})"));
        }
        lines.push(line);
    }
    for (k, m) in &r.membership {
        lines.push(format!("membership {k}: {m}"));
    }
    let failing = r.failing().count();
    lines.push(format!("{} checks, {failing} failing, seed {}", r.checks.len(), r.seed));
    lines.join("\n")
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    #[serde(flatten)]
    pub report: ClassificationReport,
    /// Verdict of `X(I) = 0` when the case provides a first integral.
    pub first_integral_verified: Option<bool>,
}

impl ClassifyOutput {
    fn to_text(&self) -> String {
        let r = &self.report;
        let mut lines = vec![format!("case {}: {}", r.case, r.galois)];
        for (s, m) in &r.labels {
            lines.push(format!("solution {s}: {m}"));
        }
        if let Some(i) = &r.first_integral {
            lines.push(format!("first integral: {i}"));
        }
        if let Some(v) = self.first_integral_verified {
            lines.push(format!("X(I) = 0: {v}"));
        }
        lines.join("\n")
    }
}

pub fn cmd_classify(m: &Manifest, opts: &GlobalOpts, env_seed: Option<&str>) -> CliResult<ClassifyOutput> {
    let s = open_session(m, opts, env_seed)?;
    let section = m.classify.clone().ok_or_else(|| schema("missing [classify] section"))?;
    let ode = riccati_reduce(&s.system);
    let mut solutions = Vec::new();
    for (k, text) in section.solutions.iter().enumerate() {
        let zeta = s.expr(&format!("classify.solutions[{k}]"), text)?;
        let v = is_zero_with(&ode.residual(&zeta), &s.sampler).map_err(DkitError::from)?;
        if !v.is_zero() {
            return Err(DkitError::NotRiccatiSolution { what: zeta.to_string(), residual: v.residual() }.into());
        }
        solutions.push((zeta, None));
    }
    let report = classify(&solutions, &s.var)?;
    let first_integral_verified = match &report.first_integral {
        Some(i) => {
            let field = build_vector_field(&s.system);
            Some(is_zero_with(&field.apply(i), &s.sampler).map_err(DkitError::from)?.is_zero())
        }
        None => None,
    };
    Ok(ClassifyOutput { report, first_integral_verified })
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftRow {
    pub side: Side,
    pub flow: usize,
    pub span: [f64; 2],
    pub rel_tol: f64,
    pub drift: f64,
    pub samples_used: usize,
    pub drift_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftTable {
    pub artifact_version: String,
    pub seed: String,
    pub rows: Vec<DriftRow>,
}

impl DriftTable {
    fn to_text(&self) -> String {
        let mut lines = vec![format!("{:<6} {:>4} {:>22} {:>9} {:>11}  verdict", "side", "flow", "span", "rel_tol", "drift")];
        for r in &self.rows {
            lines.push(format!(
                "{:<6} {:>4} {:>22} {:>9.1e} {:>11.3e}  {}",
                r.side.to_string(),
                r.flow,
                format!("[{}, {}]", r.span[0], r.span[1]),
                r.rel_tol,
                r.drift,
                if r.pass { "pass" } else { "fail" }
            ));
        }
        lines.join("\n")
    }
}

pub fn cmd_flow(m: &Manifest, opts: &GlobalOpts, env_seed: Option<&str>) -> CliResult<DriftTable> {
    let s = open_session(m, opts, env_seed)?;
    if m.flows.is_empty() {
        return Err(schema("no [[flows]] entries"));
    }
    let mut rows = Vec::new();
    for cert in certificates(m, &s)? {
        let i = cert.first_integral.as_ref().ok_or_else(|| schema(format!("the {} certificate has no first integral", cert.side)))?;
        let i = cert.restore(i);
        for (k, (spec, f)) in flow_specs(m, &s, &cert)?.into_iter().zip(&m.flows).enumerate() {
            let tols = f.rel_tols.clone().unwrap_or_else(|| vec![spec.control.rel_tol]);
            for t in tols {
                let c = conserve_along_flow(&i, &spec.clone().with_rel_tol(t))?;
                rows.push(DriftRow {
                    side: cert.side,
                    flow: k,
                    span: [spec.x0, spec.x1],
                    rel_tol: t,
                    drift: c.max_rel_drift,
                    samples_used: c.samples_used,
                    drift_tol: spec.drift_tol,
                    pass: c.max_rel_drift < spec.drift_tol,
                });
            }
        }
    }
    Ok(DriftTable { artifact_version: ARTIFACT_VERSION.to_string(), seed: seed_hex(s.sampler.seed), rows })
}
