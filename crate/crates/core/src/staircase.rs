//! Inverse problems on the devil's staircase `t ↦ ρ(t)`.
//!
//! Everything here rests on one monotonicity fact: `∂F_t^q/∂t ≥ 1`, so
//! `G_max(t) = max_x (F_t^q(x) - x - p)` and `G_min(t)` (same with min) are
//! increasing in `t` with slope at least one. Their zeros are the plateau
//! endpoints, and slope ≥ 1 gives a guaranteed bisection bracket from a
//! single evaluation.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::{distortion_constants, FamilyPoint, LiftDescriptor};
use crate::cont_frac::Rational;
use crate::error::{Error, Result};
use crate::extremum::{Extremum, PeriodicGrid};
use crate::rotation::{
    compare_rho, compare_with_rational, return_displacement, rotation_enclosure, RotationEstimate, SolverConfig,
};

/// The parameter interval `ρ^{-1}(p/q)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plateau {
    pub pq: Rational,
    pub t_left: f64,
    pub t_right: f64,
    pub tol: f64,
    /// `G_max(t_left)` and `G_min(t_right)`.
    pub residuals: (f64, f64),
    /// The Farey solver locks at the midpoint (trivially true for width 0).
    pub midpoint_locked: bool,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        self.t_right - self.t_left
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_left + self.t_right)
    }
}

/// `(G_min(t), G_max(t))` on the uniform grid with refinement, for any `q`.
pub fn plateau_targets(fp: &FamilyPoint, r: Rational, cfg: &SolverConfig) -> (f64, f64) {
    if fp.lift.is_rotation() {
        let v = (r.q() as f64).mul_add(fp.t, -(r.p() as f64));
        return (v, v);
    }
    let g = |x: f64| return_displacement(fp, x, r);
    let grid = PeriodicGrid::sample(cfg.grid, &g);
    let (_, lo) = grid.refine(&g, Extremum::Min, cfg.candidates, cfg.x_tol);
    let (_, hi) = grid.refine(&g, Extremum::Max, cfg.candidates, cfg.x_tol);
    (lo, hi)
}

/// Zero of an increasing `g` with slope ≥ 1, to bracket width `tol`.
fn unit_slope_root<G: Fn(f64) -> f64>(g: G, t_start: f64, tol: f64) -> (f64, f64) {
    let v = g(t_start);
    if v == 0.0 {
        return (t_start, 0.0);
    }
    let (mut lo, mut hi) = if v > 0.0 {
        (t_start - v, t_start)
    } else {
        (t_start, t_start - v)
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return (mid, 0.0);
        }
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, g(t))
}

pub fn plateau_endpoints(lift: &LiftDescriptor, pq: Rational, tol: f64) -> Result<Plateau> {
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    plateau_endpoints_with(lift, pq, tol, &SolverConfig::for_point(&fp))
}

pub fn plateau_endpoints_with(lift: &LiftDescriptor, pq: Rational, tol: f64, cfg: &SolverConfig) -> Result<Plateau> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    if lift.is_rotation() {
        let t = pq.value();
        return Ok(Plateau {
            pq,
            t_left: t,
            t_right: t,
            tol,
            residuals: (0.0, 0.0),
            midpoint_locked: true,
        });
    }
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    let g_max = |t: f64| plateau_targets(&fp.at(t), pq, cfg).1;
    let g_min = |t: f64| plateau_targets(&fp.at(t), pq, cfg).0;
    let (t_left, r_left) = unit_slope_root(g_max, pq.value(), tol);
    let (t_right, r_right) = unit_slope_root(g_min, pq.value(), tol);
    if t_right - t_left < 2.0 * tol {
        let mid = 0.5 * (t_left + t_right);
        return Ok(Plateau {
            pq,
            t_left: mid,
            t_right: mid,
            tol,
            residuals: (r_left, r_right),
            midpoint_locked: true,
        });
    }
    let mid = 0.5 * (t_left + t_right);
    let midpoint_locked = compare_with_rational(&fp.at(mid), pq, cfg) == Ordering::Equal;
    Ok(Plateau {
        pq,
        t_left,
        t_right,
        tol,
        residuals: (r_left, r_right),
        midpoint_locked,
    })
}

/// A parameter `t*` with `ρ(t*) = α`, to bracket width `tol`.
pub fn inverse_rho(lift: &LiftDescriptor, alpha: f64, tol: f64) -> Result<f64> {
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    inverse_rho_with(lift, alpha, tol, &SolverConfig::for_point(&fp))
}

pub fn inverse_rho_with(lift: &LiftDescriptor, alpha: f64, tol: f64, cfg: &SolverConfig) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::Range(format!("target {alpha} is not finite")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    // ρ(t) - t never leaves [-A, A]
    let a = lift.amplitude() + 1e-9;
    let (mut lo, mut hi) = (alpha - a, alpha + a);
    while hi - lo > tol {
        let mut moved = false;
        for frac in [0.5, 0.25, 0.75] {
            let t = lo + frac * (hi - lo);
            if t <= lo || t >= hi {
                continue;
            }
            match compare_rho(&fp.at(t), alpha, cfg) {
                Ok(Ordering::Less) => lo = t,
                Ok(Ordering::Greater) => hi = t,
                Ok(Ordering::Equal) => return Ok(t),
                Err(Error::Unresolvable { .. }) => continue,
                Err(e) => return Err(e),
            }
            moved = true;
            break;
        }
        if !moved {
            if hi - lo <= tol * 2.0 || lo + 0.5 * (hi - lo) == lo {
                break;
            }
            return Err(Error::Unresolvable { lo, hi });
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `m(J_d(p/q))` against `2 e^M q^{-d}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JdMeasurement {
    pub pq: Rational,
    pub d: f64,
    pub measure: f64,
    pub bound: f64,
    pub m: f64,
    /// `t*(p/q - q^{-d})` and `t*(p/q + q^{-d})`.
    pub t_minus: f64,
    pub t_plus: f64,
    pub plateau: Plateau,
    /// Some end came from an unresolved bracket, so `measure` is an upper bound.
    pub outer_estimate: bool,
    /// `measure <= bound` up to twice the solver tolerance.
    pub holds: bool,
}

pub fn measure_jd(lift: &LiftDescriptor, pq: Rational, d: f64, tol: f64) -> Result<JdMeasurement> {
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    measure_jd_with(lift, pq, d, tol, &SolverConfig::for_point(&fp))
}

pub fn measure_jd_with(
    lift: &LiftDescriptor,
    pq: Rational,
    d: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<JdMeasurement> {
    if pq.q() <= 1 || !(d > 3.0) {
        return Err(Error::PreconditionFailed(format!("need q > 1 and d > 3, got {pq}, d = {d}")));
    }
    let w = (pq.q() as f64).powf(-d);
    let centre = pq.value();
    // An unresolved end is replaced by the outer end of its bracket, which
    // can only enlarge the measure.
    let outer = |r: Result<f64>, upper: bool| match r {
        Ok(t) => Ok((t, false)),
        Err(Error::Unresolvable { lo, hi }) => Ok((if upper { hi } else { lo }, true)),
        Err(e) => Err(e),
    };
    let (t_minus, t_plus) = rayon::join(
        || outer(inverse_rho_with(lift, centre - w, tol, cfg), false),
        || outer(inverse_rho_with(lift, centre + w, tol, cfg), true),
    );
    let ((t_minus, wide_minus), (t_plus, wide_plus)) = (t_minus?, t_plus?);
    let plateau = plateau_endpoints_with(lift, pq, tol, cfg)?;
    let m = distortion_constants(lift)?.m;
    let measure = (t_plus - t_minus) - plateau.width();
    let bound = 2.0 * m.exp() * w;
    Ok(JdMeasurement {
        pq,
        d,
        measure,
        bound,
        m,
        t_minus,
        t_plus,
        outer_estimate: wide_minus || wide_plus,
        holds: measure <= bound + 2.0 * tol,
        plateau,
    })
}

/// `ρ` sampled on a uniform parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaircaseSample {
    pub points: Vec<(f64, RotationEstimate)>,
}

impl StaircaseSample {
    /// Indices `i` where sample `i + 1` sits entirely below sample `i`.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].1.upper() < w[0].1.lower())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn locked_count(&self) -> usize {
        self.points.iter().filter(|(_, e)| e.locked.is_some()).count()
    }

    /// CSV with header `t,rho,radius,locked_p,locked_q`; unlocked rows
    /// leave the last two fields empty.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "rho", "radius", "locked_p", "locked_q"])?;
        for (t, est) in &self.points {
            let (lp, lq) = match est.locked {
                Some(r) => (r.p().to_string(), r.q().to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([t.to_string(), est.value.to_string(), est.radius.to_string(), lp, lq])?;
        }
        w.flush()
    }
}

pub fn sweep(lift: &LiftDescriptor, t_lo: f64, t_hi: f64, samples: usize, tol: f64) -> Result<StaircaseSample> {
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    sweep_with(lift, t_lo, t_hi, samples, tol, &SolverConfig::for_point(&fp))
}

pub fn sweep_with(
    lift: &LiftDescriptor,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<StaircaseSample> {
    if !(t_lo < t_hi) || samples < 2 {
        return Err(Error::Domain("need t_lo < t_hi and at least two samples".into()));
    }
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    let step = (t_hi - t_lo) / (samples - 1) as f64;
    let points = (0..samples)
        .into_par_iter()
        .map(|i| {
            let t = if i + 1 == samples { t_hi } else { t_lo + i as f64 * step };
            rotation_enclosure(&fp.at(t), tol, cfg).map(|e| (t, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StaircaseSample { points })
}

/// `[ρ(-1/2), ρ(1/2)]` as a pair of enclosures.
pub fn rotation_range(lift: &LiftDescriptor, tol: f64) -> Result<(RotationEstimate, RotationEstimate)> {
    let fp = FamilyPoint::new(lift.clone(), 0.0);
    let cfg = SolverConfig::for_point(&fp);
    Ok((
        rotation_enclosure(&fp.at(-0.5), tol, &cfg)?,
        rotation_enclosure(&fp.at(0.5), tol, &cfg)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn identity_plateau_is_a_point() {
        let pl = plateau_endpoints(&LiftDescriptor::identity(), r(1, 3), 1e-10).unwrap();
        assert_eq!(pl.t_left, 1.0 / 3.0);
        assert_eq!(pl.width(), 0.0);
    }

    #[test]
    fn arnold_zero_plateau_closed_form() {
        let lift = LiftDescriptor::arnold(0.9).unwrap();
        let pl = plateau_endpoints(&lift, r(0, 1), 1e-12).unwrap();
        let half = 0.9 / TAU;
        assert!((pl.t_right - half).abs() < 1e-10, "{}", pl.t_right);
        assert!((pl.t_left + half).abs() < 1e-10, "{}", pl.t_left);
        assert!(pl.midpoint_locked);
    }

    #[test]
    fn inverse_rho_identity_and_order() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let t = inverse_rho(&LiftDescriptor::identity(), golden, 1e-12).unwrap();
        assert!((t - golden).abs() <= 1e-12);

        let lift = LiftDescriptor::arnold(0.5).unwrap();
        let tg = inverse_rho(&lift, golden, 1e-7).unwrap();
        let ts = inverse_rho(&lift, 2f64.sqrt() - 1.0, 1e-7).unwrap();
        assert!(ts < tg);
        let est = rotation_enclosure(&FamilyPoint::new(lift, tg), 1e-6, &SolverConfig::default()).unwrap();
        assert!((est.value - golden).abs() < 1e-5, "{est:?}");
    }

    #[test]
    fn identity_jd_is_the_bound() {
        let jd = measure_jd(&LiftDescriptor::identity(), r(1, 5), 3.5, 1e-12).unwrap();
        let expect = 2.0 * 5f64.powf(-3.5);
        assert!((jd.measure - expect).abs() < 1e-10);
        assert!((jd.bound - expect).abs() < 1e-15);
        assert!(jd.holds);
    }

    #[test]
    fn sweep_of_identity_is_the_diagonal() {
        let s = sweep(&LiftDescriptor::identity(), -0.5, 0.5, 11, 1e-9).unwrap();
        for (t, e) in &s.points {
            assert!(e.contains(*t), "{t} {e:?}");
        }
        assert!(s.monotonicity_violations().is_empty());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,rho,radius,locked_p,locked_q\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
