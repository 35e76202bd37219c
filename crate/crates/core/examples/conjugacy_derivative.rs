use rotascope::circle_map::{FamilyPoint, LiftDescriptor};
use rotascope::measure_conj::conjugacy_from_orbit;
use rotascope::rotation::{rotation_enclosure, SolverConfig};
use rotascope::staircase::inverse_rho;

fn main() -> rotascope::Result<()> {
    let lift = LiftDescriptor::arnold(0.5)?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let t0 = inverse_rho(&lift, golden, 1e-7)?;
    let fp = FamilyPoint::new(lift.clone(), t0);
    for n in [512, 2048, 8192] {
        let h = conjugacy_from_orbit(&fp, 0.0, n)?;
        let r = h.residual(&fp);
        println!(
            "n={n:>5}  int 1/h' = {:.6}  residual knots {:.1e} midpoints {:.1e}",
            h.inverse_derivative_integral(),
            r.knots,
            r.midpoints
        );
    }
    let delta = 1e-5;
    let rho = |t: f64| {
        let fp = FamilyPoint::new(lift.clone(), t);
        rotation_enclosure(&fp, 1e-14, &SolverConfig::for_point(&fp)).map(|e| e.value)
    };
    println!("difference quotient      {:.6}", (rho(t0 + delta)? - rho(t0 - delta)?) / (2.0 * delta));
    Ok(())
}
