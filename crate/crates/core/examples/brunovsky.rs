use rotascope::circle_map::LiftDescriptor;
use rotascope::measure_conj::{brunovsky_check, RotationPath};

fn main() -> rotascope::Result<()> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let hbar = LiftDescriptor::from_coefficients("hbar", vec![0.05], vec![0.02])?;
    let paths = [
        ("R_t", RotationPath::Rotation, golden, 1e-4),
        ("R_(t + 0.01 sin 2pi t)", RotationPath::Reparametrized { a: 0.01 }, 0.3, 1e-5),
        ("hbar R_t hbar^-1", RotationPath::Conjugated { hbar }, golden, 1e-4),
    ];
    for (name, path, t, delta) in paths {
        let c = brunovsky_check(&path, t, delta)?;
        println!(
            "{name:<24} lhs {:.8}  rhs {:.8}  gap {:.1e}  (integral in original coordinates {:.6})",
            c.lhs, c.rhs, c.gap, c.literal_rhs
        );
    }
    Ok(())
}
