//! Acceptance suite. Runs without the test harness so every criterion prints
//! one line; the process fails if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use darboux_kit::catalog::{self, Laguerre};
use darboux_kit::darboux::{dt_iterate, dt_potential, eigenvalue_chain, shape_invariance_check};
use darboux_kit::expr::{differentiate, is_zero, normalize, parse, substitute, Expr, C64};
use darboux_kit::integrability::{
    build_certificate_minus, build_certificate_plus, build_certificate_plus_seed, field_membership, second_solution,
    IntegrabilityCertificate, Membership,
};
use darboux_kit::riccati::{check_eigenfunction, log_derivative, system_from_potential, SchrodingerSystem};
use darboux_kit::verifier::{conserve_along_flow, run_certificate_suite, FlowSpec, SuiteOptions, Verdict};

type Outcome = Result<String, String>;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, || format!("took {:.2?}, limit {limit:?}", t.elapsed()))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Minus and plus certificates of a radial entry at level `n`.
fn radial_pair(kind: Laguerre, ell: &Expr, n: u32) -> Result<[IntegrabilityCertificate; 2], String> {
    let entry = match kind {
        Laguerre::Oscillator => catalog::oscillator3d(ell),
        Laguerre::Coulomb => catalog::coulomb(ell),
    };
    let lambda = catalog::eigenvalue(kind, n, ell);
    let sys = entry.system(&lambda).map_err(err)?;
    let zeta = log_derivative(&catalog::eigenfunction(kind, n, ell).map_err(err)?, "r").map_err(err)?;
    let zeta0 = entry.zeta0().ok_or("no seed")?;
    let minus = build_certificate_minus(&sys, &zeta, None).map_err(err)?;
    let plus = if n == 0 {
        build_certificate_plus_seed(&sys, &zeta0).map_err(err)?
    } else {
        build_certificate_plus(&sys, &zeta0, &zeta, None).map_err(err)?
    };
    Ok([minus, plus])
}

fn free_pair(lambda: &str, zeta: &str) -> Result<[IntegrabilityCertificate; 2], String> {
    let sys = catalog::free_particle().system(&p(lambda)).map_err(err)?;
    let minus = build_certificate_minus(&sys, &p(zeta), None).map_err(err)?;
    let plus = build_certificate_plus(&sys, &p("1/x"), &p(zeta), None).map_err(err)?;
    Ok([minus, plus])
}

fn c1_dt_free_particle() -> Outcome {
    let t = Instant::now();
    let v = dt_potential(&Expr::zero(), &p("x"), &Expr::zero(), "x", false).map_err(err)?;
    ensure(v.to_string() == "2/x^2", || format!("got {v}"))?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("V+ = {v}"))
}

fn c2_dt_radial() -> Outcome {
    let t = Instant::now();
    let ell = p("l");
    let cases = [
        (catalog::oscillator3d(&ell), "r^2+(l+1)*(l+2)/r^2-(2*l+1)"),
        (catalog::coulomb(&ell), "(l+1)*(l+2)/r^2-2*(l+1)/r+1"),
    ];
    for (entry, display) in cases {
        let (psi0, l1) = entry.seed.clone().ok_or("no seed")?;
        let v = dt_potential(&entry.potential, &psi0, &l1, "r", false).map_err(err)?;
        let residual = is_zero(&(v.clone() - p(display))).map_err(err)?;
        ensure(residual.is_zero(), || format!("{}: {v} vs {display}", entry.name))?;
    }
    within(t, Duration::from_secs(5))?;
    Ok("oscillator and Coulomb transforms match".into())
}

fn c3_shape_invariance() -> Outcome {
    let ell = p("l");
    let osc = catalog::oscillator3d(&ell);
    let (psi0, l1) = osc.seed.clone().ok_or("no seed")?;
    let map = &osc.maps[0];
    let s = shape_invariance_check(&map.family, &map.at, &psi0, &l1, "r").map_err(err)?;
    ensure(s.invariant && s.remainder.to_string() == "4", || format!("{s:?}"))?;

    let mut rs = Vec::new();
    let mut at = map.at.clone();
    for _ in 0..5 {
        let binding = [("l".to_string(), at[0].clone())];
        let seed = substitute(&p("r^(l+1)*exp(-r^2/2)"), &binding);
        let step = shape_invariance_check(&map.family, &at, &seed, &Expr::zero(), "r").map_err(err)?;
        ensure(step.invariant, || format!("not invariant at l = {}", at[0]))?;
        rs.push(step.remainder);
        at = map.family.image(&at).map_err(err)?;
    }
    let chain = eigenvalue_chain(&rs);
    for (n, lambda) in chain.iter().enumerate() {
        ensure(*lambda == Expr::num(4 * n as i64), || format!("lambda_{n} = {lambda}"))?;
    }

    let free = catalog::free_particle();
    let (psi0, l1) = free.seed.clone().ok_or("no seed")?;
    let fm = &free.maps[0];
    let s = shape_invariance_check(&fm.family, &fm.at, &psi0, &l1, "x").map_err(err)?;
    ensure(!s.invariant, || "free particle reported shape invariant".into())?;
    Ok(format!("R = 4, lambda_0..5 = {}", chain.iter().map(Expr::to_string).collect::<Vec<_>>().join(", ")))
}

fn c4_certificate_suite() -> Outcome {
    let t = Instant::now();
    let mut certs = Vec::new();
    certs.extend(free_pair("lambda", "sqrt(-lambda)")?);
    certs.extend(free_pair("-1", "1")?);
    for l in 0..=2 {
        for n in 0..=2 {
            certs.extend(radial_pair(Laguerre::Oscillator, &Expr::num(l), n)?);
        }
    }
    for l in 0..=1 {
        for n in 0..=2 {
            certs.extend(radial_pair(Laguerre::Coulomb, &Expr::num(l), n)?);
        }
    }
    let opts = SuiteOptions::default();
    let mut records = 0;
    for cert in &certs {
        let report = run_certificate_suite(cert, &[], &opts);
        ensure(report.checks.len() == 6, || format!("{} records on the {} side", report.checks.len(), cert.side))?;
        if let Some(bad) = report.failing().next() {
            return Err(format!("{} at lambda = {}: {:?}", bad.name, cert.lambda, bad.verdict));
        }
        records += report.checks.len();
    }
    within(t, Duration::from_secs(60))?;
    Ok(format!("{} certificates, {records} identities, {:.1?}", certs.len(), t.elapsed()))
}

fn c5_closed_exponential_factors() -> Outcome {
    let mut cases = 0;
    for ell in [p("0"), p("1"), p("2"), p("l")] {
        for n in 1..=2 {
            if ell == p("l") && n == 2 {
                continue;
            }
            let pn = catalog::laguerre_related(n, &ell, Laguerre::Oscillator).map_err(err)?;
            let dpn = differentiate(&pn, "r");
            let [minus, plus] = radial_pair(Laguerre::Oscillator, &ell, n)?;
            let r_pow = Expr::pow(Expr::var("r"), ell.clone() + Expr::num(2));
            let gauss = p("exp(-r^2/2)");
            let want_minus = normalize(&(r_pow.clone() * pn * gauss.clone()));
            let want_plus = normalize(&(r_pow * dpn * gauss));
            let got_minus = normalize(&minus.restore(&minus.exp_factor.f));
            let got_plus = normalize(&plus.restore(&plus.exp_factor.f));
            ensure(got_minus == want_minus, || format!("F- at l = {ell}, n = {n}: {got_minus} vs {want_minus}"))?;
            ensure(got_plus == want_plus, || format!("F+ at l = {ell}, n = {n}: {got_plus} vs {want_plus}"))?;
            ensure(!got_minus.has_antideriv() && !got_plus.has_antideriv(), || "formal antiderivative left".into())?;
            cases += 1;
        }
    }
    Ok(format!("{cases} cases closed exactly"))
}

fn c6_second_solution() -> Outcome {
    let z2 = second_solution(&p("sqrt(-lambda)"), "x").map_err(err)?;
    let want = normalize(&p("-sqrt(-lambda)"));
    ensure(z2 == want, || format!("got {z2}"))?;
    Ok(format!("second solution {z2}"))
}

fn flow_on(cert: &IntegrabilityCertificate, span: (f64, f64), psi0: f64, dpsi0: f64) -> Result<f64, String> {
    let i = cert.restore(cert.first_integral.as_ref().ok_or("no first integral")?);
    let sys: SchrodingerSystem = cert.restored_system().map_err(err)?;
    let spec = FlowSpec::new(sys, span, C64::new(psi0, 0.0), C64::new(dpsi0, 0.0));
    Ok(conserve_along_flow(&i, &spec).map_err(err)?.max_rel_drift)
}

fn c7_flow_conservation() -> Outcome {
    let t = Instant::now();
    let free = free_pair("-1", "1")?;
    let mut worst_free: f64 = 0.0;
    for cert in &free {
        let d = flow_on(cert, (0.1, 5.0), 1.0, -0.999)?;
        ensure(d < 1e-8, || format!("free particle {} drift {d:e}", cert.side))?;
        worst_free = worst_free.max(d);
    }
    let osc = radial_pair(Laguerre::Oscillator, &Expr::zero(), 1)?;
    let mut worst_osc: f64 = 0.0;
    for cert in &osc {
        let d = flow_on(cert, (0.5, 3.0), 1.0, 0.3)?;
        ensure(d < 1e-7, || format!("oscillator {} drift {d:e}", cert.side))?;
        worst_osc = worst_osc.max(d);
    }

    let opts = SuiteOptions::default();
    for cert in free.iter().chain(&osc) {
        let sys = cert.restored_system().map_err(err)?;
        let span = if sys.var == "x" { (0.1, 5.0) } else { (0.5, 3.0) };
        let flow = FlowSpec::new(sys, span, C64::new(1.0, 0.0), C64::new(0.3, 0.0));
        for object in ["f", "K", "F", "L", "R", "I"] {
            let bad = cert.corrupted(object).map_err(err)?;
            let report = run_certificate_suite(&bad, std::slice::from_ref(&flow), &opts);
            let caught = report.checks.iter().any(|c| {
                (c.verdict == Verdict::Fail && c.name.ends_with("drift") && c.residual.is_some_and(|r| r > 1e-2))
                    || (c.verdict == Verdict::Fail && !c.name.contains("flow"))
            });
            ensure(caught, || format!("corrupted {object} on the {} side went unnoticed", cert.side))?;
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("free particle drift {worst_free:.1e}, oscillator drift {worst_osc:.1e}, 24 faults caught"))
}

fn c8_eigenfunctions() -> Outcome {
    let mut cases = 0;
    for kind in [Laguerre::Oscillator, Laguerre::Coulomb] {
        for l in 0..=3 {
            let ell = Expr::num(l);
            for n in 0..=5 {
                let lambda = catalog::eigenvalue(kind, n, &ell);
                let psi = catalog::eigenfunction(kind, n, &ell).map_err(|e| format!("{kind:?} l = {l}, n = {n}: {e}"))?;
                let v = match kind {
                    Laguerre::Oscillator => catalog::oscillator3d(&ell).potential,
                    Laguerre::Coulomb => catalog::coulomb(&ell).potential,
                };
                let sys = system_from_potential(&v, &lambda, "r").map_err(err)?;
                let verdict = check_eigenfunction(&sys, &psi).map_err(err)?;
                ensure(verdict.is_zero(), || format!("{kind:?} l = {l}, n = {n}: residual {:e}", verdict.residual()))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} eigenfunctions verified"))
}

fn c9_iterated_dt() -> Outcome {
    let chain = dt_iterate(&Expr::zero(), &[(p("x"), Expr::zero()), (p("x^2"), Expr::zero())], 2, "x").map_err(err)?;
    let got: Vec<String> = chain.iter().map(Expr::to_string).collect();
    ensure(got == ["2/x^2", "6/x^2"], || format!("got {got:?}"))?;
    let template = p("n*(n-1)*b^2/(b*x+c)^2");
    for (v, n) in chain.iter().zip([2, 3]) {
        let b = [("b".to_string(), Expr::one()), ("c".to_string(), Expr::zero()), ("n".to_string(), Expr::num(n))];
        let family = normalize(&substitute(&template, &b));
        ensure(*v == family, || format!("n = {n}: {v} vs {family}"))?;
    }
    Ok(format!("[{}]", got.join(", ")))
}

fn c10_rationality() -> Outcome {
    let mut ells: Vec<Expr> = (0..=2).map(Expr::num).collect();
    ells.push(p("l"));
    for ell in &ells {
        for n in 0..=2 {
            if *ell == p("l") && n == 2 {
                continue;
            }
            for cert in radial_pair(Laguerre::Oscillator, ell, n)? {
                for object in ["f", "K", "L"] {
                    let m = cert.membership[object];
                    ensure(m == Membership::Rational, || format!("{} {object} at l = {ell}, n = {n}: {m}", cert.side))?;
                }
            }
        }
    }
    let mut labels = Vec::new();
    for cert in free_pair("lambda", "sqrt(-lambda)")? {
        let top = cert.membership.values().copied().max().ok_or("no labels")?;
        ensure(top == Membership::RationalPlusExpLog, || format!("free particle {} side: {top}", cert.side))?;
        let f_big = field_membership(&cert.restore(&cert.exp_factor.f));
        ensure(f_big == Membership::RationalPlusExpLog, || format!("free particle F: {f_big}"))?;
        labels.push(format!("{} {top}", cert.side));
    }
    Ok(format!("oscillator f, K, L rational; free particle {}", labels.join(", ")))
}

fn c11_determinism() -> Outcome {
    let manifest = concat!(env!("CARGO_MANIFEST_DIR"), "/manifests/free_particle.toml");
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_dkit"))
            .args(["certify", "--deterministic", "--json", "--manifest", manifest])
            .env_remove("DKIT_SEED")
            .output()
            .map_err(err)?;
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("DT reproduction, free particle", c1_dt_free_particle),
        ("DT reproduction, oscillator and Coulomb", c2_dt_radial),
        ("shape invariance", c3_shape_invariance),
        ("certificate identity suite", c4_certificate_suite),
        ("closed-form exponential factors", c5_closed_exponential_factors),
        ("second-solution formula", c6_second_solution),
        ("flow conservation", c7_flow_conservation),
        ("eigenfunction generation", c8_eigenfunctions),
        ("iterated DT", c9_iterated_dt),
        ("rationality preservation", c10_rationality),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name} ({secs:.2} s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name} ({secs:.2} s): {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
