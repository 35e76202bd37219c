use rotascope::circle_map::{FamilyPoint, LiftDescriptor};
use rotascope::rotation::{rotation_birkhoff, rotation_enclosure, SolverConfig};

fn main() -> rotascope::Result<()> {
    let lift = LiftDescriptor::arnold(0.8)?;
    println!("{:>6} {:>22} {:>10} {:>8} {:>20}", "t", "farey", "radius", "locked", "birkhoff");
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let fp = FamilyPoint::new(lift.clone(), t);
        let farey = rotation_enclosure(&fp, 1e-12, &SolverConfig::for_point(&fp))?;
        let birk = rotation_birkhoff(&fp, 0.0, 1_000_000)?;
        let locked = farey.locked.map(|r| r.to_string()).unwrap_or_default();
        println!("{t:>6.2} {:>22.16} {:>10.1e} {locked:>8} {:>20.12}", farey.value, farey.radius, birk.value);
    }
    Ok(())
}
