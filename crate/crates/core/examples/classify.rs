//! First-integral case from a list of Riccati solutions.

use darboux_kit::expr::parse;
use darboux_kit::integrability::classify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rational = [parse("1/x")?, parse("0")?, parse("1/(x-1)")?];
    let cases: [(&str, Vec<_>); 3] = [
        ("three rational", rational.iter().map(|e| (e.clone(), None)).collect()),
        ("one exponential", vec![(parse("sqrt(-lambda)")?, None)]),
        ("none", vec![]),
    ];
    for (label, sols) in cases {
        let report = classify(&sols, "x")?;
        let integral = report.first_integral.map(|i| i.to_string()).unwrap_or_else(|| "none".into());
        println!("{label}: case {} ({}), I = {integral}", report.case, report.galois);
    }
    Ok(())
}
