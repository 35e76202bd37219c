//! Writes `t,rho,radius,locked_p,locked_q` for one Arnold map to stdout.
//!
//! `cargo run --release --example devil_staircase -- 0.95 400 > stairs.csv`

use rotascope::circle_map::LiftDescriptor;
use rotascope::staircase::sweep;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let k: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.95);
    let samples: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let s = sweep(&LiftDescriptor::arnold(k)?, 0.0, 1.0, samples, 1e-10)?;
    s.write_csv(std::io::stdout().lock())?;
    eprintln!(
        "{} of {samples} samples locked, {} monotonicity violations",
        s.locked_count(),
        s.monotonicity_violations().len()
    );
    Ok(())
}
