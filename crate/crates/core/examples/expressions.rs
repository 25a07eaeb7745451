//! Parsing, normalization, differentiation and probabilistic zero testing.

use darboux_kit::expr::{antiderivative, differentiate, is_zero, normalize, parse};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = parse("(x^2-1)/(x-1) + exp(2*ln(x))")?;
    println!("input       {e}");
    println!("normalized  {}", normalize(&e));

    let psi = parse("x^(l+1)*exp(-x^2/2)")?;
    let d = differentiate(&psi, "x");
    println!("d/dx        {}", normalize(&d));

    let f = parse("2*x*exp(x^2)")?;
    println!("antideriv   {}", antiderivative(&f, "x")?);

    let identity = parse("sin(x)^2 + cos(x)^2 - 1")?;
    println!("zero test   {:?}", is_zero(&identity)?);
    Ok(())
}
