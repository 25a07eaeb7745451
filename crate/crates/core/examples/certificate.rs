//! Darboux integrability certificates on both sides of a transformation.

use darboux_kit::catalog;
use darboux_kit::expr::parse;
use darboux_kit::integrability::{build_certificate_minus, build_certificate_plus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let free = catalog::free_particle();
    let sys = free.system(&parse("lambda")?)?;
    let zeta = parse("sqrt(-lambda)")?;

    let minus = build_certificate_minus(&sys, &zeta, None)?;
    let plus = build_certificate_plus(&sys, &parse("1/x")?, &zeta, None)?;
    for cert in [&minus, &plus] {
        println!("{} side at lambda = {}", cert.side, cert.restore(&cert.lambda));
        println!("  f = {}", cert.restore(&cert.curve.f));
        println!("  F = {}", cert.restore(&cert.exp_factor.f));
        if let Some(i) = &cert.first_integral {
            println!("  I = {}", cert.restore(i));
        }
        for (name, m) in &cert.membership {
            println!("  {name}: {m}");
        }
    }
    Ok(())
}
