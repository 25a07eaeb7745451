//! Symbolic identity suite plus first-integral drift along a numerical flow.

use darboux_kit::catalog;
use darboux_kit::expr::{parse, C64};
use darboux_kit::integrability::build_certificate_minus;
use darboux_kit::riccati::log_derivative;
use darboux_kit::verifier::{run_certificate_suite, FlowSpec, SuiteOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let osc = catalog::oscillator3d(&parse("0")?);
    let sys = osc.system(&parse("4")?)?;
    let zeta = log_derivative(&osc.eigenfunction(1)?, "r")?;
    let cert = build_certificate_minus(&sys, &zeta, None)?;

    let flow = FlowSpec::new(cert.restored_system()?, (0.5, 3.0), C64::new(1.0, 0.0), C64::new(0.3, 0.0))
        .with_drift_tol(1e-7);
    let report = run_certificate_suite(&cert, &[flow], &SuiteOptions::default());
    println!("{}", report.to_json());

    let bad = cert.corrupted("K")?;
    let report = run_certificate_suite(&bad, &[], &SuiteOptions::default());
    for c in report.failing() {
        println!("corrupted K fails {}", c.name);
    }
    Ok(())
}
