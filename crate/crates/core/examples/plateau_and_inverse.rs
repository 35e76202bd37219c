use std::f64::consts::TAU;

use rotascope::circle_map::LiftDescriptor;
use rotascope::cont_frac::Rational;
use rotascope::staircase::{inverse_rho, plateau_endpoints};

fn main() -> rotascope::Result<()> {
    let k = 0.9;
    let lift = LiftDescriptor::arnold(k)?;
    for (p, q) in [(0, 1), (1, 2), (1, 3), (2, 5), (3, 8)] {
        let pl = plateau_endpoints(&lift, Rational::new(p, q)?, 1e-12)?;
        println!("{p}/{q}: [{:.12}, {:.12}] width {:.3e}", pl.t_left, pl.t_right, pl.width());
    }
    println!("0/1 edge from the closed form: {:.12}", k / TAU);

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let t = inverse_rho(&LiftDescriptor::arnold(0.5)?, golden, 1e-7)?;
    println!("rho(t) = golden mean at t = {t:.10} (K = 0.5)");
    Ok(())
}
