//! Catalog entries, spectra and Laguerre-type eigenfunctions.

use darboux_kit::catalog::{self, Laguerre};
use darboux_kit::expr::parse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["free_particle", "oscillator3d", "coulomb"] {
        let entry = catalog::by_name(name, None)?;
        println!("{name}: V = {}", entry.potential);
    }
    let ell = parse("1")?;
    for n in 0..4 {
        println!(
            "oscillator l = 1, n = {n}: lambda = {}, P = {}",
            catalog::eigenvalue(Laguerre::Oscillator, n, &ell),
            catalog::laguerre_related(n, &ell, Laguerre::Oscillator)?
        );
    }
    for n in 0..3 {
        println!("coulomb l = 1, n = {n}: psi = {}", catalog::eigenfunction(Laguerre::Coulomb, n, &ell)?);
    }
    Ok(())
}
