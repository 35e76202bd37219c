use rotascope::circle_map::{FamilyPoint, LiftDescriptor};
use rotascope::measure_conj::{birkhoff_averages, Observable};
use rotascope::staircase::inverse_rho;

fn main() -> rotascope::Result<()> {
    let lift = LiftDescriptor::arnold(0.5)?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let fp = FamilyPoint::new(lift.clone(), inverse_rho(&lift, golden, 1e-7)?);
    let obs = [
        Observable::LogDerivative,
        Observable::IterDerivative { i: 2, j: 3 },
        Observable::IterDerivative { i: 5, j: 0 },
    ];
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let avg = birkhoff_averages(&fp, &obs, 0.0, n)?;
        let cols: Vec<String> = avg.iter().map(|a| format!("{}={:+.3e}", a.observable_tag, a.value)).collect();
        println!("n={n:>8}  {}", cols.join("  "));
    }
    Ok(())
}
