//! Numerical witnesses for certificates: flows of the linear companion system
//! `Ψ' = u, u' = (V - λ)Ψ`, conservation of first integrals along them, and
//! report assembly.
//!
//! The Riccati equation is never integrated directly. `ζ = Ψ'/Ψ` is formed
//! from the linear flow, which passes through the poles of `ζ` untouched.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::error::{DkitError, Result};
use crate::expr::{
    eval_at, eval_guarded, is_zero_with, normalize, substitute, Expr, Point, Sampler, ZeroVerdict, C64, ZETA,
};
use crate::integrability::{IntegrabilityCertificate, Membership};
use crate::riccati::SchrodingerSystem;

pub const ARTIFACT_VERSION: &str = concat!("darboux-kit ", env!("CARGO_PKG_VERSION"));

/// Grid points on which `N` is sampled before a flow starts.
const POLE_GRID: usize = 1024;
/// Minimum number of output samples of a trajectory.
const OUTPUT_POINTS: usize = 200;
const MIN_USABLE: usize = 16;
/// Samples where `|Ψ|` is below this fraction of its maximum are skipped.
const PSI_FLOOR: f64 = 1e-8;
/// Relative singularity margin when evaluating a first integral.
const EVAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000 }
    }
}

/// A trajectory request. Every parameter of the system must be bound, either
/// in the system itself or through `bindings`.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub system: SchrodingerSystem,
    /// Values substituted into the system and into conserved quantities.
    pub bindings: Vec<(String, Expr)>,
    pub x0: f64,
    pub x1: f64,
    pub psi0: C64,
    pub dpsi0: C64,
    pub control: StepControl,
    /// Largest drift a conserved quantity may show for the flow to pass.
    pub drift_tol: f64,
}

impl FlowSpec {
    pub fn new(system: SchrodingerSystem, span: (f64, f64), psi0: C64, dpsi0: C64) -> Self {
        FlowSpec { system, bindings: Vec::new(), x0: span.0, x1: span.1, psi0, dpsi0, control: StepControl::default(), drift_tol: 1e-8 }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.control.rel_tol = rel_tol;
        self
    }

    pub fn with_drift_tol(mut self, drift_tol: f64) -> Self {
        self.drift_tol = drift_tol;
        self
    }

    pub fn with_bindings(mut self, bindings: Vec<(String, Expr)>) -> Self {
        self.bindings = bindings;
        self
    }

    fn bound(&self, e: &Expr) -> Expr {
        if self.bindings.is_empty() {
            e.clone()
        } else {
            substitute(e, &self.bindings)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub x: f64,
    pub psi: C64,
    pub dpsi: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<FlowSample>,
    pub steps: usize,
    pub rejected: usize,
}

fn at(var: &str, x: f64) -> Point {
    BTreeMap::from([(var.to_string(), C64::new(x, 0.0))])
}

/// Fails if `N` vanishes on the closed span. `N` is sampled on a uniform
/// grid; sign changes and near zeros fail at once, and every local minimum of
/// `|N|` is refined by golden-section search to catch double roots between
/// grid points.
fn ensure_pole_free(sys: &SchrodingerSystem, x0: f64, x1: f64) -> Result<()> {
    let n_at = |x: f64| -> Result<C64> {
        eval_at(&sys.n, &at(&sys.var, x)).map_err(|e| DkitError::Flow(format!("N at {x}: {e}")))
    };
    let mut values = Vec::with_capacity(POLE_GRID);
    for k in 0..POLE_GRID {
        let x = x0 + (x1 - x0) * k as f64 / (POLE_GRID - 1) as f64;
        values.push((x, n_at(x)?));
    }
    let scale = values.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let vanishes = |v: C64| v.norm() <= 1e-12 * scale;
    if scale == 0.0 {
        return Err(DkitError::Flow("N vanishes on the span".into()));
    }
    for (k, &(x, v)) in values.iter().enumerate() {
        if vanishes(v) {
            return Err(DkitError::Flow(format!("N vanishes on the span at {x}")));
        }
        let Some(&(xb, b)) = values.get(k + 1) else { continue };
        if v.re * b.re < 0.0 && v.im.abs().max(b.im.abs()) <= 1e-12 * scale {
            return Err(DkitError::Flow(format!("N changes sign on the span between {x} and {xb}")));
        }
        if k == 0 || v.norm() > values[k - 1].1.norm() || v.norm() > b.norm() {
            continue;
        }
        let (mut lo, mut hi) = (values[k - 1].0, xb);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..120 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if n_at(m1)?.norm() < n_at(m2)?.norm() {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let xm = (lo + hi) / 2.0;
        if vanishes(n_at(xm)?) {
            return Err(DkitError::Flow(format!("N vanishes on the span near {xm}")));
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

type State = [C64; 2];

/// Integrates `Ψ' = u, u' = (V - λ)Ψ` over the span with an adaptive
/// Dormand-Prince 5(4) pair. Steps are clipped to land on a uniform output
/// grid of at least 200 points, so no interpolation is involved.
pub fn integrate_linear(spec: &FlowSpec) -> Result<Trajectory> {
    let bound;
    let sys = if spec.bindings.is_empty() {
        &spec.system
    } else {
        bound = spec.system.bind(&spec.bindings)?;
        &bound
    };
    let coeff = normalize(&(sys.potential.clone() - sys.lambda.clone()));
    if let Some(name) = coeff.free_names().into_iter().find(|n| n != &sys.var) {
        return Err(DkitError::Flow(format!("parameter `{name}` is unbound")));
    }
    let span = spec.x1 - spec.x0;
    if !(span.is_finite() && span != 0.0) {
        return Err(DkitError::Flow("empty span".into()));
    }
    ensure_pole_free(sys, spec.x0, spec.x1)?;
    let q = |x: f64| -> Result<C64> {
        eval_at(&coeff, &at(&sys.var, x)).map_err(|e| DkitError::Flow(format!("V - lambda at {x}: {e}")))
    };
    let rhs = |x: f64, y: &State| -> Result<State> { Ok([y[1], q(x)? * y[0]]) };

    let dir = span.signum();
    let grid: Vec<f64> = (0..=OUTPUT_POINTS).map(|k| spec.x0 + span * k as f64 / OUTPUT_POINTS as f64).collect();
    let mut samples = vec![FlowSample { x: spec.x0, psi: spec.psi0, dpsi: spec.dpsi0 }];
    let mut x = spec.x0;
    let mut y: State = [spec.psi0, spec.dpsi0];
    let mut h = dir * (span.abs() / OUTPUT_POINTS as f64).min(1e-2);
    let mut next = 1;
    let (mut steps, mut rejected) = (0, 0);
    let mut k1 = rhs(x, &y)?;
    while next < grid.len() {
        if steps + rejected >= spec.control.max_steps {
            return Err(DkitError::Flow(format!("tolerance not met within {} steps", spec.control.max_steps)));
        }
        let target = grid[next];
        let to_target = target - x;
        // A step that would leave a sliver before the grid point lands on it.
        let landing = h.abs() * 1.01 >= to_target.abs();
        let step = if landing { to_target } else { h };
        if step.abs() < 1e-14 * (1.0 + x.abs()) {
            return Err(DkitError::Flow(format!("step size underflow at x = {x}")));
        }
        let mut k = [k1, [C64::default(); 2], [C64::default(); 2], [C64::default(); 2], [C64::default(); 2], [C64::default(); 2], [C64::default(); 2]];
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    ys[c] += kj[c] * (step * A[s][j]);
                }
            }
            k[s] = rhs(x + C[s] * step, &ys)?;
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut e = C64::default();
            for s in 0..7 {
                y5[c] += k[s][c] * (step * B5[s]);
                e += k[s][c] * (step * (B5[s] - B4[s]));
            }
            let sc = spec.control.abs_tol + spec.control.rel_tol * y[c].norm().max(y5[c].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            return Err(DkitError::Flow(format!("non-finite state near x = {x}")));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            steps += 1;
            x = if landing { target } else { x + step };
            y = y5;
            k1 = k[6];
            if landing {
                samples.push(FlowSample { x, psi: y[0], dpsi: y[1] });
                next += 1;
            }
            if !landing || factor < 1.0 {
                h = step * factor;
            }
        } else {
            rejected += 1;
            h = step * factor;
        }
    }
    Ok(Trajectory { samples, steps, rejected })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conservation {
    pub max_rel_drift: f64,
    pub samples_used: usize,
}

/// Measures `max |I(x) - I(x₀)| / (1 + |I(x₀)|)` along the flow, with
/// `ζ = Ψ'/Ψ`. Samples near zeros of `Ψ` or near singularities of `I` are
/// skipped.
pub fn conserve_along_flow(i: &Expr, spec: &FlowSpec) -> Result<Conservation> {
    let var = &spec.system.var;
    let i = normalize(&spec.bound(i));
    if let Some(name) = i.free_names().into_iter().find(|n| n != var && n != ZETA) {
        return Err(DkitError::Flow(format!("first integral has unbound parameter `{name}`")));
    }
    let traj = integrate_linear(spec)?;
    let max_psi = traj.samples.iter().map(|s| s.psi.norm()).fold(0.0, f64::max);
    let mut values = Vec::new();
    for s in &traj.samples {
        if s.psi.norm() <= PSI_FLOOR * max_psi {
            continue;
        }
        let zeta = s.dpsi / s.psi;
        let mut point = at(var, s.x);
        point.insert(ZETA.to_string(), zeta);
        if let Ok((v, _)) = eval_guarded(&i, &point, EVAL_MARGIN) {
            values.push(v);
        }
    }
    if values.len() < MIN_USABLE {
        return Err(DkitError::Flow(format!("only {} usable samples (need {MIN_USABLE})", values.len())));
    }
    let i0 = values[0];
    let max_rel_drift = values.iter().map(|v| (v - i0).norm() / (1.0 + i0.norm())).fold(0.0, f64::max);
    Ok(Conservation { max_rel_drift, samples_used: values.len() })
}

/// Drift of `i` at each relative tolerance, other settings as in `spec`.
pub fn drift_by_tolerance(i: &Expr, spec: &FlowSpec, rel_tols: &[f64]) -> Result<Vec<f64>> {
    rel_tols
        .iter()
        .map(|&t| conserve_along_flow(i, &spec.clone().with_rel_tol(t)).map(|c| c.max_rel_drift))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Symbolic,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub anchor: String,
    pub verdict: Verdict,
    pub residual: Option<f64>,
    /// Sample point that exposed a nonzero residual, as `[re, im]` pairs.
    pub witness: Option<BTreeMap<String, [f64; 2]>>,
    pub runtime_ms: f64,
    pub seed: String,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub artifact_version: String,
    pub seed: String,
    pub checks: Vec<CheckRecord>,
    /// Field membership of each certificate object, keyed `side.object`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub membership: BTreeMap<String, Membership>,
}

impl VerificationReport {
    pub fn new(seed: u64) -> Self {
        VerificationReport {
            artifact_version: ARTIFACT_VERSION.to_string(),
            seed: seed_hex(seed),
            checks: Vec::new(),
            membership: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict != Verdict::Pass)
    }

    /// Appends the records of `other`, keeping the order by name.
    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.membership.extend(other.membership);
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn seed_hex(seed: u64) -> String {
    format!("{seed:#x}")
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub sampler: Sampler,
    /// Zero every `runtime_ms` so reports are byte-stable.
    pub deterministic: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { sampler: Sampler::default(), deterministic: false }
    }
}

fn witness(v: &ZeroVerdict) -> Option<BTreeMap<String, [f64; 2]>> {
    match v {
        ZeroVerdict::NonZero { witness, .. } => Some(witness.iter().map(|(k, z)| (k.clone(), [z.re, z.im])).collect()),
        ZeroVerdict::Zero { .. } => None,
    }
}

/// Runs every symbolic identity of `cert` and the conservation of its first
/// integral along each flow. Failures become verdicts, never errors.
pub fn run_certificate_suite(cert: &IntegrabilityCertificate, flows: &[FlowSpec], opts: &SuiteOptions) -> VerificationReport {
    let seed = seed_hex(opts.sampler.seed);
    let ms = |t: Instant| if opts.deterministic { 0.0 } else { t.elapsed().as_secs_f64() * 1e3 };
    let mut report = VerificationReport::new(opts.sampler.seed);
    for (obj, m) in &cert.membership {
        report.membership.insert(format!("{}.{obj}", cert.side), *m);
    }
    for (name, anchor, e) in cert.identities() {
        let t = Instant::now();
        let outcome = is_zero_with(&e, &opts.sampler);
        let mut rec = CheckRecord {
            name: format!("{}.{name}", cert.side),
            kind: CheckKind::Symbolic,
            anchor: anchor.to_string(),
            verdict: Verdict::Error,
            residual: None,
            witness: None,
            runtime_ms: 0.0,
            seed: seed.clone(),
            tolerance: opts.sampler.tol,
            message: None,
        };
        match outcome {
            Ok(v) => {
                rec.verdict = if v.is_zero() { Verdict::Pass } else { Verdict::Fail };
                rec.residual = Some(v.residual());
                rec.witness = witness(&v);
            }
            Err(err) => rec.message = Some(err.to_string()),
        }
        rec.runtime_ms = ms(t);
        report.checks.push(rec);
    }
    for (k, spec) in flows.iter().enumerate() {
        let t = Instant::now();
        let mut rec = CheckRecord {
            name: format!("{}.flow_{k:02}.first_integral_drift", cert.side),
            kind: CheckKind::Flow,
            anchor: format!("first integral conserved along the flow on [{}, {}]", spec.x0, spec.x1),
            verdict: Verdict::Error,
            residual: None,
            witness: None,
            runtime_ms: 0.0,
            seed: seed.clone(),
            tolerance: spec.drift_tol,
            message: None,
        };
        match &cert.first_integral {
            None => rec.message = Some("certificate has no first integral".into()),
            Some(i) => match conserve_along_flow(&cert.restore(i), spec) {
                Ok(c) => {
                    rec.verdict = if c.max_rel_drift < spec.drift_tol { Verdict::Pass } else { Verdict::Fail };
                    rec.residual = Some(c.max_rel_drift);
                }
                Err(err) => rec.message = Some(err.to_string()),
            },
        }
        rec.runtime_ms = ms(t);
        report.checks.push(rec);
    }
    report.checks.sort_by(|a, b| a.name.cmp(&b.name));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::integrability::build_certificate_minus;
    use crate::riccati::make_system;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn free(lambda: &str) -> SchrodingerSystem {
        make_system(&p("0"), &p("1"), &p(lambda), "x").unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn exponential_is_reproduced() {
        let e = 0.1f64.exp();
        let spec = FlowSpec::new(free("-1"), (0.1, 5.0), c(e), c(e));
        let traj = integrate_linear(&spec).unwrap();
        assert!(traj.samples.len() > 200);
        for s in &traj.samples {
            assert!((s.psi - c(s.x.exp())).norm() / s.x.exp() < 1e-8, "{s:?}");
        }
    }

    #[test]
    fn oscillator_ground_state_is_reproduced() {
        let sys = make_system(&p("r^4-3*r^2"), &p("r^2"), &p("0"), "r").unwrap();
        let e = (-0.5f64).exp();
        let spec = FlowSpec::new(sys, (1.0, 3.0), c(e), c(0.0));
        for s in integrate_linear(&spec).unwrap().samples {
            let exact = s.x * (-s.x * s.x / 2.0).exp();
            assert!((s.psi.re - exact).abs() / exact < 1e-7, "{s:?}");
        }
    }

    #[test]
    fn span_through_a_pole_is_refused() {
        let sys = make_system(&p("r^4-5*r^2+2"), &p("r^2"), &p("0"), "r").unwrap();
        let spec = FlowSpec::new(sys.clone(), (-1.0, 1.0), c(1.0), c(0.0));
        assert!(matches!(integrate_linear(&spec), Err(DkitError::Flow(_))));
        let spec = FlowSpec::new(sys, (-1.0, 2.0), c(1.0), c(0.0));
        assert!(matches!(integrate_linear(&spec), Err(DkitError::Flow(_))));
        let unbound = FlowSpec::new(free("lambda"), (0.0, 1.0), c(1.0), c(0.0));
        assert!(integrate_linear(&unbound).is_err());
    }

    #[test]
    fn flows_pass_through_zeros_of_psi() {
        // Ψ = sin x has zeros at π and 2π; ζ = cot x has poles there.
        let spec = FlowSpec::new(free("1"), (0.5, 7.0), c(0.5f64.sin()), c(0.5f64.cos()));
        let traj = integrate_linear(&spec).unwrap();
        let last = traj.samples.last().unwrap();
        assert!((last.psi.re - 7.0f64.sin()).abs() < 1e-8);
        let i = p("(zeta*tan(x)-1)/(zeta+tan(x))");
        let c = conserve_along_flow(&i, &spec).unwrap();
        assert!(c.max_rel_drift < 1e-7, "{c:?}");
    }

    #[test]
    fn constant_is_conserved_exactly() {
        let spec = FlowSpec::new(free("-1"), (0.1, 5.0), c(1.0), c(0.0));
        let c = conserve_along_flow(&p("7"), &spec).unwrap();
        assert_eq!(c.max_rel_drift, 0.0);
        assert!(c.samples_used >= MIN_USABLE);
    }

    #[test]
    fn free_particle_integral_and_its_corruption() {
        let cert = build_certificate_minus(&free("-1"), &p("1"), None).unwrap();
        let spec = FlowSpec::new(free("-1"), (0.1, 5.0), c(1.0), c(-1.0 + 1e-3));
        let good = conserve_along_flow(cert.first_integral.as_ref().unwrap(), &spec).unwrap();
        assert!(good.max_rel_drift < 1e-8, "{good:?}");
        let bad = cert.corrupted("I").unwrap();
        let drift = conserve_along_flow(bad.first_integral.as_ref().unwrap(), &spec).unwrap();
        assert!(drift.max_rel_drift > 1e-2, "{drift:?}");
    }

    #[test]
    fn drift_shrinks_with_tolerance() {
        // Fast oscillation, so that steps are set by the tolerance rather
        // than by the output grid.
        let spec = FlowSpec::new(free("25"), (0.5, 10.0), c(2.5f64.sin()), c(5.0 * 2.5f64.cos()));
        let i = p("(zeta*tan(5*x)-5)/(zeta+5*tan(5*x))");
        let d = drift_by_tolerance(&i, &spec, &[1e-5, 1e-7, 1e-9]).unwrap();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn suite_reports_and_isolates_faults() {
        let cert = build_certificate_minus(&free("-1"), &p("1"), None).unwrap();
        let flows = [FlowSpec::new(free("-1"), (0.1, 5.0), c(1.0), c(-1.0 + 1e-3))];
        let opts = SuiteOptions { deterministic: true, ..SuiteOptions::default() };
        let report = run_certificate_suite(&cert, &flows, &opts);
        assert!(report.passed(), "{}", report.to_json());
        assert_eq!(report.checks.len(), 7);
        assert_eq!(report.to_json(), run_certificate_suite(&cert, &flows, &opts).to_json());
        let bad = run_certificate_suite(&cert.corrupted("K").unwrap(), &[], &opts);
        let failing: Vec<_> = bad.failing().map(|c| c.name.as_str()).collect();
        assert_eq!(failing, ["minus.invariant_curve"]);
        assert!(bad.checks.iter().find(|c| c.name == "minus.invariant_curve").unwrap().witness.is_some());
    }
}
