use rotascope::circle_map::{FamilyPoint, LiftDescriptor};
use rotascope::rotation::{rotation_enclosure, SolverConfig};

fn main() -> rotascope::Result<()> {
    for digits in [15, 24, 32] {
        let fp = FamilyPoint::new(LiftDescriptor::arnold(0.7)?.with_precision(digits)?, 0.4);
        let cfg = SolverConfig::for_point(&fp);
        let e = rotation_enclosure(&fp, 1e-16, &cfg)?;
        println!("{digits} digits: rho = {:.15} ± {:.1e} (denominators up to {})", e.value, e.radius, cfg.q_cap);
    }
    Ok(())
}
