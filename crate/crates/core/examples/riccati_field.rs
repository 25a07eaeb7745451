//! Riccati reduction of a Schrödinger operator and its vector field.

use darboux_kit::catalog;
use darboux_kit::expr::{normalize, parse};
use darboux_kit::riccati::{build_vector_field, check_eigenfunction, log_derivative, riccati_reduce};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let osc = catalog::oscillator3d(&parse("0")?);
    let sys = osc.system(&parse("4")?)?;
    let ode = riccati_reduce(&sys);
    println!("zeta' = {}", ode.rhs);

    let psi = osc.eigenfunction(1)?;
    println!("psi_1 = {psi}: {:?}", check_eigenfunction(&sys, &psi)?);

    let zeta = log_derivative(&psi, "r")?;
    println!("residual of (ln psi_1)' = {}", normalize(&ode.residual(&zeta)));

    let field = build_vector_field(&sys);
    println!("div X = {}", field.divergence());
    Ok(())
}
