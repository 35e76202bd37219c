//! Difference quotients of `t ↦ ρ(t)`: towards plateaus of convergents of an
//! irrational value, and away from the edge of a rational plateau.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::{distortion_constants, FamilyPoint, LiftDescriptor};
use crate::cont_frac::{continued_fraction, Rational};
use crate::denjoy::hat_ell_bound_check;
use crate::error::{Error, Result};
use crate::rotation::{rotation_enclosure, RotationEstimate, SolverConfig};
use crate::staircase::plateau_endpoints;

/// Bisection tolerance for plateau endpoints.
pub const PROBE_PLATEAU_TOL: f64 = 1e-13;
/// Target width of rotation number enclosures.
pub const PROBE_RHO_TOL: f64 = 1e-14;

/// One difference quotient `(p/q - ρ(t0)) / (t' - t0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientRecord {
    /// Index in the continued fraction convergents.
    pub k: usize,
    pub convergent: Rational,
    /// The point of `ρ^{-1}(p/q)` nearest to `t0`.
    pub t_prime: f64,
    pub quotient: f64,
    /// `radius(ρ(t0)) / |t' - t0|`.
    pub uncertainty: f64,
    pub bound_em: f64,
    /// `exp(-M l̂)` when the return combinatorics were certified.
    pub bound_e55: Option<f64>,
    pub running_max: f64,
}

impl QuotientRecord {
    pub fn satisfies_em(&self) -> bool {
        self.quotient + self.uncertainty >= self.bound_em
    }

    pub fn satisfies_e55(&self) -> Option<bool> {
        self.bound_e55.map(|b| self.quotient + self.uncertainty >= b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedConvergent {
    pub k: usize,
    pub convergent: Rational,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientSequence {
    pub t0: f64,
    pub rho: RotationEstimate,
    pub m: f64,
    pub records: Vec<QuotientRecord>,
    pub skipped: Vec<SkippedConvergent>,
    /// Final running maximum of the quotients.
    pub limsup_diagnostic: f64,
}

/// Convergents shared by every point of the enclosure.
fn resolved_convergents(rho: &RotationEstimate) -> Result<Vec<Rational>> {
    let c = |a: f64| -> Result<Vec<Rational>> { Ok(continued_fraction(a, 64)?.convergents) };
    let (lo, mid, hi) = (c(rho.lower())?, c(rho.value)?, c(rho.upper())?);
    let shared = lo
        .iter()
        .zip(&mid)
        .zip(&hi)
        .take_while(|((a, b), c)| a == b && b == c)
        .count();
    Ok(mid[..shared].to_vec())
}

fn e55_bound(lift: &LiftDescriptor, t0: f64, rho: &RotationEstimate, c: Rational) -> Option<f64> {
    let closest = continued_fraction(rho.value, 64).ok()?.closest_return_convergents();
    let n_index = closest.iter().position(|r| *r == c)?;
    let check = hat_ell_bound_check(lift, t0, 0.0, n_index).ok()?;
    (check.hat_ell_max < 1.0).then_some(check.bound)
}

/// Quotients towards the plateaus of the first `n_conv` convergents of `ρ(t0)`.
pub fn quotient_sequence(lift: &LiftDescriptor, t0: f64, n_conv: usize) -> Result<QuotientSequence> {
    if n_conv == 0 {
        return Err(Error::Domain("need at least one convergent".into()));
    }
    let fp = FamilyPoint::new(lift.clone(), t0);
    let cfg = SolverConfig::for_point(&fp);
    let rho = rotation_enclosure(&fp, PROBE_RHO_TOL, &cfg)?;
    if let Some(r) = rho.locked {
        return Err(Error::PreconditionFailed(format!("ρ({t0}) is locked at {r}")));
    }
    let m = distortion_constants(lift)?.m;
    let bound_em = (-m).exp();
    let convergents: Vec<(usize, Rational)> = resolved_convergents(&rho)?
        .into_iter()
        .enumerate()
        .take(n_conv)
        .filter(|(_, c)| c.q() <= cfg.q_cap)
        .collect();

    let outcomes: Vec<std::result::Result<QuotientRecord, SkippedConvergent>> = convergents
        .par_iter()
        .map(|&(k, c)| {
            let skip = |reason: String| SkippedConvergent {
                k,
                convergent: c,
                reason,
            };
            let plateau = plateau_endpoints(lift, c, PROBE_PLATEAU_TOL).map_err(|e| skip(e.to_string()))?;
            let t_prime = match c.cmp_real(rho.value) {
                Ordering::Greater => plateau.t_left,
                _ => plateau.t_right,
            };
            let dt = t_prime - t0;
            let dr = c.value() - rho.value;
            if dt == 0.0 || dt.signum() != dr.signum() {
                return Err(skip(format!("plateau edge {t_prime} not resolved from t0 = {t0}")));
            }
            Ok(QuotientRecord {
                k,
                convergent: c,
                t_prime,
                quotient: dr / dt,
                uncertainty: rho.radius / dt.abs(),
                bound_em,
                bound_e55: e55_bound(lift, t0, &rho, c),
                running_max: 0.0,
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for o in outcomes {
        match o {
            Ok(mut r) => {
                running = running.max(r.quotient);
                r.running_max = running;
                records.push(r);
            }
            Err(s) => skipped.push(s),
        }
    }
    Ok(QuotientSequence {
        t0,
        rho,
        m,
        records,
        skipped,
        limsup_diagnostic: running,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Domain(format!("side must be left or right, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupProbe {
    pub pq: Rational,
    pub side: Side,
    pub boundary: f64,
    pub offsets: Vec<f64>,
    /// `|ρ(boundary ± δ) - p/q| / δ`.
    pub quotients: Vec<f64>,
    /// `radius(ρ) / δ`.
    pub uncertainties: Vec<f64>,
    /// Least-squares slope of `log quotient` against `log δ`.
    pub loglog_slope: f64,
}

impl BlowupProbe {
    pub fn strictly_increasing(&self) -> bool {
        self.quotients.windows(2).all(|w| w[1] > w[0])
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Difference quotients of `ρ` just outside one edge of the plateau of `pq`.
pub fn rational_boundary_probe(lift: &LiftDescriptor, pq: Rational, side: Side, deltas: &[f64]) -> Result<BlowupProbe> {
    if deltas.is_empty() || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Domain("offsets must be positive and finite".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("offsets must be strictly decreasing".into()));
    }
    let plateau = plateau_endpoints(lift, pq, PROBE_PLATEAU_TOL)?;
    let smallest = deltas[deltas.len() - 1];
    if smallest < 10.0 * plateau.tol {
        return Err(Error::Domain(format!(
            "offset {smallest} is below ten times the plateau tolerance {}",
            plateau.tol
        )));
    }
    let boundary = match side {
        Side::Left => plateau.t_left,
        Side::Right => plateau.t_right,
    };
    let fp = FamilyPoint::new(lift.clone(), boundary);
    let cfg = SolverConfig::for_point(&fp);
    let measured = deltas
        .par_iter()
        .map(|&d| -> Result<(f64, f64)> {
            let t = match side {
                Side::Left => boundary - d,
                Side::Right => boundary + d,
            };
            let est = rotation_enclosure(&fp.at(t), PROBE_RHO_TOL.min(d * 1e-10), &cfg)?;
            let gap = (est.value - pq.value()).abs();
            if est.locked == Some(pq) || est.radius >= 0.5 * gap {
                return Err(Error::Unresolvable {
                    lo: est.lower(),
                    hi: est.upper(),
                });
            }
            Ok((gap / d, est.radius / d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (quotients, uncertainties): (Vec<f64>, Vec<f64>) = measured.into_iter().unzip();
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = quotients.iter().map(|q| q.ln()).collect();
    Ok(BlowupProbe {
        pq,
        side,
        boundary,
        offsets: deltas.to_vec(),
        loglog_slope: least_squares_slope(&lx, &ly),
        quotients,
        uncertainties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn identity_quotients_are_one() {
        let seq = quotient_sequence(&LiftDescriptor::identity(), GOLDEN, 10).unwrap();
        assert_eq!(seq.records.len(), 10);
        for r in &seq.records {
            assert!((r.quotient - 1.0).abs() < 1e-9, "{r:?}");
            assert!((r.t_prime - r.convergent.value()).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_boundary_has_no_blowup() {
        let pq = Rational::new(1, 2).unwrap();
        let probe = rational_boundary_probe(&LiftDescriptor::identity(), pq, Side::Right, &[1e-2, 1e-4, 1e-6]).unwrap();
        for q in &probe.quotients {
            assert!((q - 1.0).abs() < 1e-9, "{probe:?}");
        }
        assert!(probe.loglog_slope.abs() < 1e-9);
    }

    #[test]
    fn arnold_boundary_quotients_grow() {
        let lift = LiftDescriptor::arnold(0.5).unwrap();
        let deltas = [1e-2, 1e-3, 1e-4, 1e-5];
        let probe = rational_boundary_probe(&lift, Rational::integer(0), Side::Right, &deltas).unwrap();
        assert!(probe.strictly_increasing(), "{probe:?}");
        assert!((probe.loglog_slope + 0.5).abs() < 0.1, "{probe:?}");
    }

    #[test]
    fn probe_rejects_bad_offsets() {
        let id = LiftDescriptor::identity();
        let pq = Rational::new(1, 2).unwrap();
        assert!(rational_boundary_probe(&id, pq, Side::Left, &[1e-3, 1e-2]).is_err());
        assert!(rational_boundary_probe(&id, pq, Side::Left, &[1e-13]).is_err());
        assert!(rational_boundary_probe(&id, pq, Side::Left, &[]).is_err());
        assert_eq!("left".parse::<Side>().unwrap(), Side::Left);
        assert!("up".parse::<Side>().is_err());
    }

    #[test]
    fn least_squares_recovers_power_law() {
        let x: Vec<f64> = (1..6).map(|k| -(k as f64)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert!((least_squares_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
