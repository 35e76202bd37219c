use rotascope::cont_frac::{closest_returns, continued_fraction, convergent_test, ContinuedFraction, Rational};

fn main() -> rotascope::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let cf = continued_fraction(golden, 64)?;
    println!("golden mean: {} quotients, last convergent {}", cf.a.len(), cf.convergents.last().unwrap());

    let sqrt2 = ContinuedFraction::quadratic(0, 2, 1, 12)?;
    println!("sqrt(2) = [{}]", sqrt2.a.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "));

    let pi_ish = continued_fraction(Rational::new(355, 113)?, 16)?;
    println!("355/113 = {:?} (exact: {})", pi_ish.a, pi_ish.exact);

    for r in closest_returns(std::f64::consts::PI - 3.0, 20_000)? {
        println!("closest return q = {:>5}  |q a - p| = {:.3e}", r.q, (r.q as f64 * (std::f64::consts::PI - 3.0) - r.p as f64).abs());
    }

    let t = convergent_test(golden, Rational::new(13, 21)?, 3.5)?;
    println!("13/21 satisfies the hypothesis: {}, is a convergent: {}", t.holds_hypothesis, t.is_convergent);
    Ok(())
}
