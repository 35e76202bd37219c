use rotascope::circle_map::LiftDescriptor;
use rotascope::cont_frac::Rational;
use rotascope::derivative_probe::{rational_boundary_probe, Side};

fn main() -> rotascope::Result<()> {
    let deltas: Vec<f64> = (2..=7).map(|k| 10f64.powi(-k)).collect();
    for (name, lift, pq) in [
        ("arnold K=0.5, 0/1", LiftDescriptor::arnold(0.5)?, Rational::integer(0)),
        ("arnold K=0.9, 0/1", LiftDescriptor::arnold(0.9)?, Rational::integer(0)),
        ("identity, 0/1", LiftDescriptor::identity(), Rational::integer(0)),
    ] {
        let p = rational_boundary_probe(&lift, pq, Side::Right, &deltas)?;
        let qs: Vec<String> = p.quotients.iter().map(|q| format!("{q:.3}")).collect();
        println!("{name:<18} slope {:+.3}  quotients {}", p.loglog_slope, qs.join(" "));
    }
    Ok(())
}
