use rotascope::circle_map::LiftDescriptor;
use rotascope::denjoy::ConvergentFrame;
use rotascope::staircase::inverse_rho;

fn main() -> rotascope::Result<()> {
    let lift = LiftDescriptor::arnold(0.5)?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let t0 = inverse_rho(&lift, golden, 1e-7)?;
    println!("{:>4} {:>10} {:>10} {:>10} {:>8} {:>9} {:>8}", "q", "e10", "e100", "e101", "l_hat", "quotient", "bound");
    for n in 1..=7 {
        let frame = ConvergentFrame::new(&lift, t0, n)?;
        let x = frame.to_frame(0.3);
        let part = frame.partition(x)?;
        let c = frame.hat_ell_check(x)?;
        let m = &part.margins;
        println!(
            "{:>4} {:>10.3e} {:>10.3e} {:>10.3e} {:>8.4} {:>9.5} {:>8.5}",
            frame.q(),
            m.e10,
            m.e100,
            m.e101,
            c.hat_ell_max,
            c.quotient,
            c.bound
        );
    }
    Ok(())
}
