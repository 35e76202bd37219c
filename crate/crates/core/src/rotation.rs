//! Rotation numbers of family members: Birkhoff averages and Farey brackets.
//!
//! The Farey estimator walks the Stern–Brocot tree. Whether `ρ(t)` lies
//! below, above or on a fraction `p/q` is read off the extrema of
//! `g(x) = F_t^q(x) - x - p`: both negative means `ρ < p/q`, both positive
//! means `ρ > p/q`, a sign change means `f_t^q` has a periodic point of type
//! `p/q` and `ρ = p/q` exactly. Runs of equal moves are galloped, so the
//! number of tests grows with the number of partial quotients of `ρ`, not
//! with their size.

use std::cmp::Ordering;

use serde::Serialize;

use crate::circle_map::{CircleLift, LiftPoint, ITERATE_CAP};
use crate::cont_frac::Rational;
use crate::error::{Error, Result};
use crate::extremum::{golden_section, Extremum, PeriodicGrid};
use crate::real::{DoubleDouble, Real};

/// Tuning of the Farey solver and everything built on it.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Largest denominator the solver will test.
    pub q_cap: i64,
    /// Uniform grid size for the extrema of `F_t^q - x - p`.
    pub grid: usize,
    /// Above this `q` the extrema are sampled along one orbit of length
    /// `q + grid` instead of on the uniform grid.
    pub grid_q_max: i64,
    /// Grid extrema refined by golden-section search.
    pub candidates: usize,
    pub x_tol: f64,
}

impl SolverConfig {
    pub const Q_CAP_BINARY64: i64 = 10_000;
    pub const Q_CAP_DOUBLE_DOUBLE: i64 = 100_000;
    /// Rotations are compared exactly, so the cap only has to keep `q t`
    /// representable.
    pub const Q_CAP_ROTATION: i64 = 1_000_000_000_000;

    pub fn for_point<M: CircleLift>(fp: &M) -> Self {
        let q_cap = if fp.translation().is_some() {
            Self::Q_CAP_ROTATION
        } else if fp.extended_precision() {
            Self::Q_CAP_DOUBLE_DOUBLE
        } else {
            Self::Q_CAP_BINARY64
        };
        Self {
            q_cap,
            ..Self::default()
        }
    }

    pub fn with_q_cap(mut self, q_cap: i64) -> Self {
        self.q_cap = q_cap;
        self
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q_cap: Self::Q_CAP_BINARY64,
            grid: 1024,
            grid_q_max: 128,
            candidates: 4,
            x_tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationMethod {
    Birkhoff,
    Farey,
}

/// An enclosure `[value - radius, value + radius]` of `ρ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub radius: f64,
    /// Iterations (Birkhoff) or the largest denominator tested (Farey).
    pub n_used: u64,
    pub method: RotationMethod,
    /// Set when a periodic point certified `ρ = p/q`.
    pub locked: Option<Rational>,
    /// Final Farey bracket, when there is one.
    pub bracket: Option<(Rational, Rational)>,
}

impl RotationEstimate {
    pub fn lower(&self) -> f64 {
        match self.bracket {
            Some((lo, _)) => lo.value(),
            None => self.value - self.radius,
        }
    }

    pub fn upper(&self) -> f64 {
        match self.bracket {
            Some((_, hi)) => hi.value(),
            None => self.value + self.radius,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    /// The two enclosures intersect.
    pub fn overlaps(&self, other: &RotationEstimate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    fn locked_at(r: Rational, n_used: u64) -> Self {
        Self {
            value: r.value(),
            radius: 0.0,
            n_used,
            method: RotationMethod::Farey,
            locked: Some(r),
            bracket: Some((r, r)),
        }
    }

    fn from_bracket(lo: Rational, hi: Rational, n_used: u64) -> Self {
        let (a, b) = (lo.value(), hi.value());
        Self {
            value: 0.5 * (a + b),
            radius: 0.5 * (b - a),
            n_used,
            method: RotationMethod::Farey,
            locked: None,
            bracket: Some((lo, hi)),
        }
    }
}

/// `(F_t^n(x0) - x0) / n` with radius `1/n`.
pub fn rotation_birkhoff<M: CircleLift>(fp: &M, x0: f64, n: u64) -> Result<RotationEstimate> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n > ITERATE_CAP {
        return Err(Error::CapExceeded {
            requested: n,
            cap: ITERATE_CAP,
        });
    }
    let displacement = if let Some(t) = fp.translation() {
        n as f64 * t
    } else if fp.extended_precision() {
        orbit_displacement::<DoubleDouble, M>(fp, x0, n, 0)
    } else {
        orbit_displacement::<f64, M>(fp, x0, n, 0)
    };
    Ok(RotationEstimate {
        value: displacement / n as f64,
        radius: 1.0 / n as f64,
        n_used: n,
        method: RotationMethod::Birkhoff,
        locked: None,
        bracket: None,
    })
}

fn orbit_displacement<T: Real, M: CircleLift>(fp: &M, x0: f64, n: u64, p: i64) -> f64 {
    let start = LiftPoint::<T>::from_f64(x0);
    let mut pt = start;
    for _ in 0..n {
        pt = pt.step(fp);
    }
    pt.displacement(&start, p)
}

/// `F_t^q(x) - x - p`.
pub fn return_displacement<M: CircleLift>(fp: &M, x: f64, r: Rational) -> f64 {
    let q = r.q() as u64;
    if fp.extended_precision() {
        orbit_displacement::<DoubleDouble, M>(fp, x, q, r.p())
    } else {
        orbit_displacement::<f64, M>(fp, x, q, r.p())
    }
}

/// Approximate `(min_x, max_x)` of `F_t^q(x) - x - p`.
pub fn return_extrema<M: CircleLift>(fp: &M, r: Rational, cfg: &SolverConfig) -> (f64, f64) {
    if let Some(t) = fp.translation() {
        let v = (r.q() as f64).mul_add(t, -(r.p() as f64));
        return (v, v);
    }
    if r.q() <= cfg.grid_q_max {
        let g = |x: f64| return_displacement(fp, x, r);
        let grid = PeriodicGrid::sample(cfg.grid, &g);
        let (_, lo) = grid.refine(&g, Extremum::Min, cfg.candidates, cfg.x_tol);
        let (_, hi) = grid.refine(&g, Extremum::Max, cfg.candidates, cfg.x_tol);
        (lo, hi)
    } else if fp.extended_precision() {
        orbit_sampled_extrema::<DoubleDouble, M>(fp, r, cfg)
    } else {
        orbit_sampled_extrema::<f64, M>(fp, r, cfg)
    }
}

fn orbit_sampled_extrema<T: Real, M: CircleLift>(fp: &M, r: Rational, cfg: &SolverConfig) -> (f64, f64) {
    let q = r.q() as usize;
    let len = q + cfg.grid;
    let mut pts = Vec::with_capacity(len);
    let mut pt = LiftPoint::<T>::from_f64(0.0);
    pts.push(pt);
    for _ in 1..len {
        pt = pt.step(fp);
        pts.push(pt);
    }
    let mut lo = (0, f64::INFINITY);
    let mut hi = (0, f64::NEG_INFINITY);
    for j in 0..cfg.grid {
        let v = pts[j + q].displacement(&pts[j], r.p());
        if v < lo.1 {
            lo = (j, v);
        }
        if v > hi.1 {
            hi = (j, v);
        }
    }
    // the signs already disagree, nothing to refine
    if lo.1 <= 0.0 && hi.1 >= 0.0 {
        return (lo.1, hi.1);
    }
    let w = 2.0 / cfg.grid as f64;
    let g = |x: f64| return_displacement(fp, x, r);
    let x_lo = pts[lo.0].frac.to_f64();
    let x_hi = pts[hi.0].frac.to_f64();
    let (_, m) = golden_section(|x| -g(x), x_lo - w, x_lo + w, cfg.x_tol);
    let (_, big) = golden_section(g, x_hi - w, x_hi + w, cfg.x_tol);
    (lo.1.min(-m), hi.1.max(big))
}

/// Position of `ρ(t)` relative to `r`: `Equal` means locked at `r`.
pub fn compare_with_rational<M: CircleLift>(fp: &M, r: Rational, cfg: &SolverConfig) -> Ordering {
    if let Some(t) = fp.translation() {
        return r.cmp_real(t);
    }
    let (lo, hi) = return_extrema(fp, r, cfg);
    if hi < 0.0 {
        Ordering::Less
    } else if lo > 0.0 {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

enum Run {
    Hit(i64),
    /// Largest `k` still ahead and the first `k` known not to be (`None`
    /// when the cap stopped the search).
    Span(i64, Option<i64>),
}

/// Length of a Stern–Brocot run: the largest `k <= k_max` with
/// `probe(k) == ahead`, assuming `probe(1) == ahead` and monotone answers.
fn run_length<F>(k_max: i64, ahead: Ordering, mut probe: F) -> Result<Run>
where
    F: FnMut(i64) -> Result<Ordering>,
{
    let mut good = 1;
    let mut bad = None;
    let mut step = 1;
    while good + step <= k_max {
        let k = good + step;
        match probe(k)? {
            Ordering::Equal => return Ok(Run::Hit(k)),
            o if o == ahead => {
                good = k;
                step *= 2;
            }
            _ => {
                bad = Some(k);
                break;
            }
        }
    }
    let mut hi = bad.unwrap_or(k_max + 1);
    while hi - good > 1 {
        let mid = good + (hi - good) / 2;
        match probe(mid)? {
            Ordering::Equal => return Ok(Run::Hit(mid)),
            o if o == ahead => good = mid,
            _ => {
                hi = mid;
                bad = Some(mid);
            }
        }
    }
    Ok(Run::Span(good, bad))
}

/// Farey brackets visited by the solver, one per completed run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FareyTrace {
    pub brackets: Vec<(Rational, Rational)>,
}

/// Farey-bracket enclosure of `ρ(t)` of width at most `tol`.
pub fn rotation_farey<M: CircleLift>(fp: &M, tol: f64) -> Result<RotationEstimate> {
    rotation_farey_with(fp, tol, &SolverConfig::for_point(fp), None)
}

/// Same as [`rotation_farey`] but a denominator-capped enclosure is
/// returned as `Ok` instead of `Error::QCapExceeded`.
pub fn rotation_enclosure<M: CircleLift>(fp: &M, tol: f64, cfg: &SolverConfig) -> Result<RotationEstimate> {
    match rotation_farey_with(fp, tol, cfg, None) {
        Err(Error::QCapExceeded(est)) => Ok(*est),
        other => other,
    }
}

pub fn rotation_farey_with<M: CircleLift>(
    fp: &M,
    tol: f64,
    cfg: &SolverConfig,
    mut trace: Option<&mut FareyTrace>,
) -> Result<RotationEstimate> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let y = fp.lift(0.0_f64);
    if !y.is_finite() {
        return Err(Error::Domain(format!("map value {y} at 0 is not finite")));
    }
    let mut n_used = 1u64;
    let mut test = |r: Rational| {
        n_used = n_used.max(r.q() as u64);
        compare_with_rational(fp, r, cfg)
    };

    // integer bracket; F_t(0) - 0 lies within one of ρ
    let mut n = y.floor() as i64;
    let (mut lo, mut hi) = loop {
        match test(Rational::integer(n)) {
            Ordering::Equal => return Ok(RotationEstimate::locked_at(Rational::integer(n), 1)),
            Ordering::Less => {
                n -= 1;
                if test(Rational::integer(n)) == Ordering::Greater {
                    break (Rational::integer(n), Rational::integer(n + 1));
                }
            }
            Ordering::Greater => match test(Rational::integer(n + 1)) {
                Ordering::Less => break (Rational::integer(n), Rational::integer(n + 1)),
                Ordering::Equal => return Ok(RotationEstimate::locked_at(Rational::integer(n + 1), 1)),
                Ordering::Greater => n += 1,
            },
        }
    };
    if let Some(tr) = trace.as_deref_mut() {
        tr.brackets.push((lo, hi));
    }

    loop {
        if hi.value() - lo.value() <= tol {
            return Ok(RotationEstimate::from_bracket(lo, hi, n_used));
        }
        let m = lo.mediant(&hi);
        if m.q() > cfg.q_cap {
            let est = RotationEstimate::from_bracket(lo, hi, n_used);
            return Err(Error::QCapExceeded(Box::new(est)));
        }
        let side = test(m);
        let (from, towards) = match side {
            Ordering::Equal => return Ok(RotationEstimate::locked_at(m, n_used)),
            Ordering::Greater => (lo, hi),
            Ordering::Less => (hi, lo),
        };
        let k_max = (cfg.q_cap - from.q()) / towards.q();
        let run = run_length(k_max, side, |k| Ok(test(from.towards(&towards, k))))?;
        let (k, bad) = match run {
            Run::Hit(k) => return Ok(RotationEstimate::locked_at(from.towards(&towards, k), n_used)),
            Run::Span(k, bad) => (k, bad),
        };
        let near = from.towards(&towards, k);
        // without a failing k the cap stopped the run early
        let far = match bad {
            Some(b) => from.towards(&towards, b),
            None => towards,
        };
        if side == Ordering::Greater {
            lo = near;
            hi = far;
        } else {
            hi = near;
            lo = far;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.brackets.push((lo, hi));
        }
        if bad.is_none() {
            let est = RotationEstimate::from_bracket(lo, hi, n_used);
            if hi.value() - lo.value() <= tol {
                return Ok(est);
            }
            return Err(Error::QCapExceeded(Box::new(est)));
        }
    }
}

/// Largest `k <= k_max` with `α` strictly beyond `from ⊕ k·towards` on the
/// side of `towards`, by exact comparisons. `k = 1` must already hold.
fn alpha_run(alpha: f64, from: Rational, towards: Rational, k_max: i64) -> i64 {
    let beyond = towards.cmp(&from);
    let holds = |k: i64| from.towards(&towards, k).cmp_real(alpha) == beyond;
    let mut good = 1;
    let mut step = 1;
    let mut bad = k_max + 1;
    while good + step <= k_max {
        if holds(good + step) {
            good += step;
            step *= 2;
        } else {
            bad = good + step;
            break;
        }
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if holds(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Order of `ρ(t)` against a binary64 target `α`.
///
/// Follows the Stern–Brocot path of `α`, which is known exactly, and tests
/// `ρ(t)` only at the two fractions that end each run of that path. The
/// first fraction that separates the two decides the comparison.
pub fn compare_rho<M: CircleLift>(fp: &M, alpha: f64, cfg: &SolverConfig) -> Result<Ordering> {
    if !alpha.is_finite() || alpha.abs() > 1e12 {
        return Err(Error::Range(format!("target {alpha} is not usable")));
    }
    let test = |r: Rational| compare_with_rational(fp, r, cfg);
    // largest denominator for which the exact comparisons with α are valid
    let exact_cap = (1i64 << 52) / 2;
    let n = alpha.floor() as i64;
    let base = Rational::integer(n);
    match test(base) {
        Ordering::Less => return Ok(Ordering::Less),
        Ordering::Equal => {
            return Ok(if base.cmp_real(alpha) == Ordering::Equal {
                Ordering::Equal
            } else {
                Ordering::Less
            })
        }
        Ordering::Greater if base.cmp_real(alpha) == Ordering::Equal => return Ok(Ordering::Greater),
        Ordering::Greater => {}
    }
    let top = Rational::integer(n + 1);
    if test(top) != Ordering::Less {
        return Ok(Ordering::Greater);
    }
    let (mut lo, mut hi) = (base, top);
    loop {
        let m = lo.mediant(&hi);
        if m.q() > cfg.q_cap || m.q() > exact_cap {
            return Err(Error::Unresolvable {
                lo: lo.value(),
                hi: hi.value(),
            });
        }
        let alpha_side = m.cmp_real(alpha);
        if alpha_side == Ordering::Equal {
            return Ok(test(m));
        }
        let (from, towards) = if alpha_side == Ordering::Greater { (lo, hi) } else { (hi, lo) };
        let k_lim = (cfg.q_cap.min(exact_cap) - from.q()) / towards.q();
        let a = alpha_run(alpha, from, towards, k_lim.max(1));
        // ρ against the last fraction of α's run
        let near = from.towards(&towards, a);
        match test(near) {
            Ordering::Equal => return Ok(alpha_side.reverse()),
            s if s != alpha_side => return Ok(s),
            _ => {}
        }
        if a >= k_lim {
            return Err(Error::Unresolvable {
                lo: lo.value().min(near.value()),
                hi: hi.value().max(near.value()),
            });
        }
        // α lies between `near` and `far` (or equals `far`)
        let far = from.towards(&towards, a + 1);
        let rho_far = test(far);
        if far.cmp_real(alpha) == Ordering::Equal {
            return Ok(rho_far);
        }
        if rho_far == Ordering::Equal || rho_far == alpha_side {
            return Ok(alpha_side);
        }
        if alpha_side == Ordering::Greater {
            lo = near;
            hi = far;
        } else {
            hi = near;
            lo = far;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::FamilyPoint;
    use crate::circle_map::LiftDescriptor;
    use crate::cont_frac::continued_fraction;

    fn arnold(k: f64, t: f64) -> FamilyPoint {
        FamilyPoint::new(LiftDescriptor::arnold(k).unwrap(), t)
    }

    fn rotation(t: f64) -> FamilyPoint {
        FamilyPoint::new(LiftDescriptor::identity(), t)
    }

    #[test]
    fn birkhoff_on_rotation_and_fixed_point() {
        let est = rotation_birkhoff(&rotation(0.3), 0.0, 1000).unwrap();
        assert_eq!(est.value, 0.3);
        assert_eq!(est.radius, 0.001);
        for n in [1, 17, 1000] {
            assert_eq!(rotation_birkhoff(&arnold(0.5, 0.0), 0.0, n).unwrap().value, 0.0);
        }
        assert!(matches!(
            rotation_birkhoff(&arnold(0.5, 0.0), 0.0, ITERATE_CAP + 1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn farey_locks_rotation_at_one_half() {
        let est = rotation_farey(&rotation(0.5), 1e-9).unwrap();
        assert_eq!(est.locked, Some(Rational::new(1, 2).unwrap()));
        assert_eq!(est.radius, 0.0);
        assert_eq!(est.value, 0.5);
    }

    #[test]
    fn farey_locks_arnold_inside_zero_plateau() {
        let est = rotation_farey(&arnold(0.5, 0.01), 1e-9).unwrap();
        assert_eq!(est.locked, Some(Rational::integer(0)));
        let est = rotation_farey(&arnold(0.5, 1.01), 1e-9).unwrap();
        assert_eq!(est.locked, Some(Rational::integer(1)));
        let est = rotation_farey(&arnold(0.5, -0.99), 1e-9).unwrap();
        assert_eq!(est.locked, Some(Rational::integer(-1)));
    }

    #[test]
    fn rotation_brackets_follow_convergents() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let mut trace = FareyTrace::default();
        let fp = rotation(golden);
        let est = rotation_farey_with(&fp, 1e-10, &SolverConfig::for_point(&fp), Some(&mut trace)).unwrap();
        assert!(est.contains(golden));
        let cf = continued_fraction(golden, 40).unwrap();
        for (lo, hi) in &trace.brackets[1..] {
            // the endpoint that moved last is a convergent
            let conv = &cf.convergents;
            assert!(conv.contains(lo) || conv.contains(hi), "{lo} {hi}");
            assert_eq!(lo.q() as i128 * hi.p() as i128 - lo.p() as i128 * hi.q() as i128, 1);
        }
        assert!(trace.brackets.len() >= 10);
    }

    #[test]
    fn farey_and_birkhoff_agree() {
        let fp = arnold(0.9, 0.25);
        let b = rotation_birkhoff(&fp, 0.0, 100_000).unwrap();
        let f = rotation_enclosure(&fp, 1e-9, &SolverConfig::for_point(&fp)).unwrap();
        assert!(b.overlaps(&f), "{b:?} {f:?}");
    }

    #[test]
    fn compare_rho_orders_rotations_exactly() {
        let cfg = SolverConfig::for_point(&rotation(0.0));
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert_eq!(compare_rho(&rotation(0.6), golden, &cfg).unwrap(), Ordering::Less);
        assert_eq!(compare_rho(&rotation(0.62), golden, &cfg).unwrap(), Ordering::Greater);
        let next = f64::from_bits(golden.to_bits() + 1);
        assert_eq!(compare_rho(&rotation(next), golden, &cfg).unwrap(), Ordering::Greater);
        // equal binary64 values with denominator 2^53 cannot be separated
        assert!(matches!(compare_rho(&rotation(golden), golden, &cfg), Err(Error::Unresolvable { .. })));
        assert_eq!(compare_rho(&rotation(-3.2), 0.5, &cfg).unwrap(), Ordering::Less);
        assert_eq!(compare_rho(&rotation(0.5), 0.5, &cfg).unwrap(), Ordering::Equal);
    }

    #[test]
    fn compare_rho_on_arnold() {
        let cfg = SolverConfig::default();
        // locked at 0 for |t| < K/2π
        assert_eq!(compare_rho(&arnold(0.5, 0.05), 0.3, &cfg).unwrap(), Ordering::Less);
        assert_eq!(compare_rho(&arnold(0.5, 0.05), -0.01, &cfg).unwrap(), Ordering::Greater);
        assert_eq!(compare_rho(&arnold(0.5, 0.05), 0.0, &cfg).unwrap(), Ordering::Equal);
    }

    #[test]
    fn orbit_sampling_detects_side_for_large_q() {
        let fp = arnold(0.5, 0.6);
        let cfg = SolverConfig::default();
        let est = rotation_enclosure(&fp, 1e-7, &cfg).unwrap();
        let r = Rational::new(1001, 1700).unwrap();
        let expect = if est.value > r.value() { Ordering::Greater } else { Ordering::Less };
        assert!(!est.contains(r.value()));
        assert_eq!(compare_with_rational(&fp, r, &cfg), expect);
    }
}
