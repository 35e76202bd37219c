use rotascope::circle_map::LiftDescriptor;
use rotascope::cont_frac::Rational;
use rotascope::staircase::measure_jd;

fn main() -> rotascope::Result<()> {
    for k in [0.0, 0.5, 0.9] {
        let lift = if k == 0.0 { LiftDescriptor::identity() } else { LiftDescriptor::arnold(k)? };
        for (p, q, d) in [(1, 2, 3.5), (1, 3, 3.5), (2, 5, 4.0)] {
            let m = measure_jd(&lift, Rational::new(p, q)?, d, 1e-7)?;
            println!(
                "K={k} {p}/{q} d={d}: measure {:.4e}  bound {:.4e}  holds {}",
                m.measure, m.bound, m.holds
            );
        }
    }
    Ok(())
}
