use rotascope::circle_map::LiftDescriptor;
use rotascope::derivative_probe::quotient_sequence;
use rotascope::staircase::inverse_rho;

fn main() -> rotascope::Result<()> {
    let lift = LiftDescriptor::arnold(0.5)?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let s = quotient_sequence(&lift, inverse_rho(&lift, golden, 1e-7)?, 10)?;
    println!("rho(t0) = {:.12} ± {:.1e}, exp(-M) = {:.5}", s.rho.value, s.rho.radius, (-s.m).exp());
    for r in &s.records {
        let refined = r.bound_e55.map(|b| format!("{b:.5}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>6}  t' = {:.10}  quotient {:.6} ± {:.1e}  refined bound {refined}  running max {:.6}",
            r.convergent.to_string(),
            r.t_prime,
            r.quotient,
            r.uncertainty,
            r.running_max
        );
    }
    for s in &s.skipped {
        println!("skipped {}: {}", s.convergent, s.reason);
    }
    Ok(())
}
