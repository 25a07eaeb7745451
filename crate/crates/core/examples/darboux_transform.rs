//! Darboux transformation of the free particle, the oscillator chain and
//! shape invariance.

use darboux_kit::catalog;
use darboux_kit::darboux::{darboux_transform, dt_iterate, shape_invariance_check};
use darboux_kit::expr::{parse, Expr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dt = darboux_transform(&Expr::zero(), &parse("x")?, &Expr::zero(), &[], "x", false)?;
    println!("free particle, seed x: V+ = {}", dt.v_plus);

    let chain = dt_iterate(&Expr::zero(), &[(parse("x")?, Expr::zero()), (parse("x^2")?, Expr::zero())], 2, "x")?;
    for (k, v) in chain.iter().enumerate() {
        println!("step {}: {v}", k + 1);
    }

    let osc = catalog::oscillator3d(&parse("l")?);
    let (psi0, lambda1) = osc.seed.clone().expect("oscillator has a seed");
    let map = &osc.maps[0];
    let s = shape_invariance_check(&map.family, &map.at, &psi0, &lambda1, "r")?;
    println!("oscillator shape invariant: {} with R = {}", s.invariant, s.remainder);
    Ok(())
}
