//! Lifts of circle diffeomorphisms and the family `f_t = R_t ∘ f`.
//!
//! A lift is a trigonometric polynomial perturbation of the identity,
//!
//! ```text
//! F(x) = x + Σ_k c_k sin(2πkx) + d_k cos(2πkx),
//! ```
//!
//! so `F(x + 1) = F(x) + 1` holds by construction and all derivatives are
//! available in closed form. The family lift is `F_t(x) = F(x) + t`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremum::{Extremum, PeriodicGrid};
use crate::real::{DoubleDouble, Real};

/// Default bound on `|n|` for [`iterate`].
pub const ITERATE_CAP: u64 = 10_000_000;

/// Residual target of the inverse solver in binary64 mode.
pub const INVERSE_TOL: f64 = 1e-14;

const DIFFEO_GRID: usize = 4096;
const DISTORTION_GRID: usize = 1 << 14;

/// An analytic degree-one lift `F(x) = x + Σ c_k sin 2πkx + d_k cos 2πkx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LiftJson", into = "LiftJson")]
pub struct LiftDescriptor {
    family: String,
    sin: Vec<f64>,
    cos: Vec<f64>,
    precision: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Coefficients {
    #[serde(default)]
    sin: Vec<f64>,
    #[serde(default)]
    cos: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LiftJson {
    family: String,
    coefficients: Coefficients,
    #[serde(default = "default_precision")]
    precision: u32,
}

fn default_precision() -> u32 {
    15
}

impl TryFrom<LiftJson> for LiftDescriptor {
    type Error = Error;

    fn try_from(raw: LiftJson) -> Result<Self> {
        LiftDescriptor::from_coefficients(&raw.family, raw.coefficients.sin, raw.coefficients.cos)?
            .with_precision(raw.precision)
    }
}

impl From<LiftDescriptor> for LiftJson {
    fn from(lift: LiftDescriptor) -> Self {
        LiftJson {
            family: lift.family,
            coefficients: Coefficients {
                sin: lift.sin,
                cos: lift.cos,
            },
            precision: lift.precision,
        }
    }
}

impl LiftDescriptor {
    /// The identity lift `F(x) = x`; the family is the pure rotation `R_t`.
    pub fn identity() -> Self {
        Self {
            family: "identity".into(),
            sin: Vec::new(),
            cos: Vec::new(),
            precision: 15,
        }
    }

    /// Arnold family `F(x) = x + (K / 2π) sin 2πx`, a diffeomorphism for `|K| < 1`.
    pub fn arnold(k: f64) -> Result<Self> {
        Self::from_coefficients("arnold", vec![k / TAU], Vec::new())
    }

    pub fn from_coefficients(family: &str, sin: Vec<f64>, cos: Vec<f64>) -> Result<Self> {
        if sin.iter().chain(cos.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        let mut lift = Self {
            family: family.to_string(),
            sin,
            cos,
            precision: 15,
        };
        lift.trim();
        let bound = lift.min_derivative_lower_bound();
        if bound <= 0.0 {
            return Err(Error::Domain(format!(
                "lift is not an orientation-preserving diffeomorphism (min F' bound {bound:.3e})"
            )));
        }
        Ok(lift)
    }

    /// Decimal digits of working precision. Values above 16 select
    /// double-double orbit arithmetic.
    pub fn with_precision(mut self, digits: u32) -> Result<Self> {
        if !(15..=32).contains(&digits) {
            return Err(Error::Domain(format!("precision {digits} outside 15..=32")));
        }
        self.precision = digits;
        Ok(self)
    }

    fn trim(&mut self) {
        while self.sin.last() == Some(&0.0) {
            self.sin.pop();
        }
        while self.cos.last() == Some(&0.0) {
            self.cos.pop();
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn sin_coefficients(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos_coefficients(&self) -> &[f64] {
        &self.cos
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn uses_double_double(&self) -> bool {
        self.precision > 16
    }

    pub fn harmonics(&self) -> usize {
        self.sin.len().max(self.cos.len())
    }

    /// True when `F(x) = x`, i.e. the family consists of rotations.
    pub fn is_rotation(&self) -> bool {
        self.harmonics() == 0
    }

    fn coeff(&self, k: usize) -> (f64, f64) {
        (
            self.sin.get(k - 1).copied().unwrap_or(0.0),
            self.cos.get(k - 1).copied().unwrap_or(0.0),
        )
    }

    /// `sup |F(x) - x|`.
    pub fn amplitude(&self) -> f64 {
        (1..=self.harmonics())
            .map(|k| {
                let (c, d) = self.coeff(k);
                c.abs() + d.abs()
            })
            .sum()
    }

    /// The lift conjugated by `x ↦ -x`, i.e. `x ↦ -F(-x)`.
    pub fn reflected(&self) -> Self {
        Self {
            family: self.family.clone(),
            sin: self.sin.clone(),
            cos: self.cos.iter().map(|d| -d).collect(),
            precision: self.precision,
        }
    }

    /// Lower bound on `min F'`. Uses `1 - Σ 2πk(|c_k| + |d_k|)` when that is
    /// positive, otherwise a grid minimum padded by the Lipschitz constant of `F'`.
    pub fn min_derivative_lower_bound(&self) -> f64 {
        let mut sum = 0.0;
        let mut lip = 0.0;
        for k in 1..=self.harmonics() {
            let (c, d) = self.coeff(k);
            let w = TAU * k as f64;
            sum += w * (c.abs() + d.abs());
            lip += w * w * (c.abs() + d.abs());
        }
        let analytic = 1.0 - sum;
        if analytic > 0.0 {
            return analytic;
        }
        let h = 1.0 / DIFFEO_GRID as f64;
        let grid_min = (0..DIFFEO_GRID)
            .map(|i| self.deriv(i as f64 * h))
            .fold(f64::INFINITY, f64::min);
        grid_min - 0.5 * h * lip
    }

    /// `F(x)` in any supported scalar type.
    #[inline]
    pub fn eval<T: Real>(&self, x: T) -> T {
        let mut acc = x;
        for k in 1..=self.harmonics() {
            let (c, d) = self.coeff(k);
            let (s, co) = if k == 1 {
                x.sin_cos_2pi()
            } else {
                (x * T::from_f64(k as f64)).sin_cos_2pi()
            };
            if c != 0.0 {
                acc = acc + s * T::from_f64(c);
            }
            if d != 0.0 {
                acc = acc + co * T::from_f64(d);
            }
        }
        acc
    }

    /// `F'(x)`.
    pub fn deriv(&self, x: f64) -> f64 {
        let mut acc = 1.0;
        for k in 1..=self.harmonics() {
            let (c, d) = self.coeff(k);
            let w = TAU * k as f64;
            let (s, co) = (x * k as f64).sin_cos_2pi();
            acc += w * (c * co - d * s);
        }
        acc
    }

    /// `F''(x)`.
    pub fn deriv2(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.harmonics() {
            let (c, d) = self.coeff(k);
            let w = TAU * k as f64;
            let (s, co) = (x * k as f64).sin_cos_2pi();
            acc -= w * w * (c * s + d * co);
        }
        acc
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Domain(format!("lift descriptor: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("lift descriptor serializes")
    }
}

/// A member `f_t` of the family, with lift `F_t(x) = F(x) + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPoint {
    pub lift: LiftDescriptor,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalOrder {
    Value,
    First,
    Second,
}

impl FamilyPoint {
    pub fn new(lift: LiftDescriptor, t: f64) -> Self {
        Self { lift, t }
    }

    pub fn at(&self, t: f64) -> Self {
        Self {
            lift: self.lift.clone(),
            t,
        }
    }

    /// `F_t(x)`, `F'(x)` or `F''(x)`.
    pub fn eval(&self, x: f64, order: EvalOrder) -> f64 {
        match order {
            EvalOrder::Value => self.lift.eval(x) + self.t,
            EvalOrder::First => self.lift.deriv(x),
            EvalOrder::Second => self.lift.deriv2(x),
        }
    }

    /// The same member seen through `x ↦ -x`: lift `-F(-x) - t`.
    pub fn reflected(&self) -> Self {
        Self {
            lift: self.lift.reflected(),
            t: -self.t,
        }
    }
}

/// Anything that behaves like a degree-one lift and can be iterated by the
/// orbit kernels.
pub trait CircleLift: Sync {
    fn lift<T: Real>(&self, x: T) -> T;

    fn derivative(&self, x: f64) -> f64;

    /// `sup |F(x) - x|`.
    fn displacement_bound(&self) -> f64;

    fn extended_precision(&self) -> bool {
        false
    }

    /// `Some(t)` when the map is the rigid rotation `x ↦ x + t`.
    fn translation(&self) -> Option<f64> {
        None
    }
}

impl CircleLift for FamilyPoint {
    #[inline]
    fn lift<T: Real>(&self, x: T) -> T {
        self.lift.eval(x) + T::from_f64(self.t)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.lift.deriv(x)
    }

    fn displacement_bound(&self) -> f64 {
        self.lift.amplitude() + self.t.abs()
    }

    fn extended_precision(&self) -> bool {
        self.lift.uses_double_double()
    }

    fn translation(&self) -> Option<f64> {
        self.lift.is_rotation().then_some(self.t)
    }
}

/// A point of `R` stored as integer turns plus a fractional part in `[0, 1)`.
/// Iterating on the fractional part keeps rounding at the scale of one turn
/// no matter how far the lift has travelled.
#[derive(Clone, Copy, Debug)]
pub struct LiftPoint<T> {
    pub turns: i64,
    pub frac: T,
}

impl<T: Real> LiftPoint<T> {
    pub fn from_f64(x: f64) -> Self {
        let n = x.floor();
        Self {
            turns: n as i64,
            frac: T::from_f64(x - n),
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        let n = self.frac.floor();
        let shift = n.to_f64();
        if shift != 0.0 {
            self.turns += shift as i64;
            self.frac = self.frac - n;
        }
        let one = T::from_f64(1.0);
        if self.frac >= one {
            self.frac = self.frac - one;
            self.turns += 1;
        }
        self
    }

    #[inline]
    pub fn step<M: CircleLift>(self, map: &M) -> Self {
        let y = map.lift(self.frac);
        LiftPoint {
            turns: self.turns,
            frac: y,
        }
        .normalized()
    }

    pub fn value(&self) -> f64 {
        self.turns as f64 + self.frac.to_f64()
    }

    /// `self - other` as a real number, computed without forming either value.
    pub fn minus(&self, other: &Self) -> f64 {
        ((self.frac - other.frac) + T::from_i64(self.turns - other.turns)).to_f64()
    }

    /// `self - other - p` with the integer shift folded in exactly.
    pub fn displacement(&self, other: &Self, p: i64) -> f64 {
        ((self.frac - other.frac) + T::from_i64(self.turns - other.turns - p)).to_f64()
    }
}

impl LiftPoint<f64> {
    pub fn step_back<M: CircleLift>(self, map: &M) -> Result<Self> {
        let y = invert(map, self.frac)?;
        Ok(LiftPoint {
            turns: self.turns,
            frac: y,
        }
        .normalized())
    }
}

/// Solve `F(y) = x` by safeguarded Newton with bisection fallback.
pub fn invert<M: CircleLift>(map: &M, x: f64) -> Result<f64> {
    let tol = INVERSE_TOL * x.abs().max(1.0);
    let a = map.displacement_bound() + 1e-9;
    let mut lo = x - a;
    let mut hi = x + a;
    let mut y = (x - (map.lift(x) - x)).clamp(lo, hi);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let r = map.lift(y) - x;
        residual = r.abs();
        if residual <= tol {
            return Ok(y);
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let d = map.derivative(y);
        let mut next = y - r / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == y {
            break;
        }
        y = next;
    }
    Err(Error::NonConvergence {
        residual,
        iterations: 200,
    })
}

/// Orbit of `x0` under `f_t` (or its inverse for negative `n`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSegment {
    pub x0: f64,
    pub n: i64,
    /// `F_t^j(x0)` for `j = 0, 1, .., n` (or `0, -1, .., n` when `n < 0`).
    pub points: Vec<f64>,
    /// `(f_t^j)'(x0)` for the same `j`.
    pub derivs: Vec<f64>,
}

pub fn iterate(fp: &FamilyPoint, x0: f64, n: i64) -> Result<OrbitSegment> {
    iterate_with_cap(fp, x0, n, ITERATE_CAP)
}

pub fn iterate_with_cap(fp: &FamilyPoint, x0: f64, n: i64, cap: u64) -> Result<OrbitSegment> {
    let steps = n.unsigned_abs();
    if steps > cap {
        return Err(Error::CapExceeded {
            requested: steps,
            cap,
        });
    }
    let len = steps as usize + 1;
    let mut points = Vec::with_capacity(len);
    let mut derivs = Vec::with_capacity(len);

    if fp.lift.is_rotation() {
        let dir = n.signum() as f64;
        for j in 0..len {
            points.push(x0 + dir * j as f64 * fp.t);
            derivs.push(1.0);
        }
        return Ok(OrbitSegment { x0, n, points, derivs });
    }

    points.push(x0);
    derivs.push(1.0);
    if n >= 0 {
        if fp.extended_precision() {
            forward::<DoubleDouble>(fp, x0, steps, &mut points, &mut derivs);
        } else {
            forward::<f64>(fp, x0, steps, &mut points, &mut derivs);
        }
    } else {
        let mut p = LiftPoint::<f64>::from_f64(x0);
        let mut d = 1.0;
        for _ in 0..steps {
            p = p.step_back(fp)?;
            d /= fp.lift.deriv(p.frac);
            points.push(p.value());
            derivs.push(d);
        }
    }
    Ok(OrbitSegment { x0, n, points, derivs })
}

fn forward<T: Real>(fp: &FamilyPoint, x0: f64, steps: u64, points: &mut Vec<f64>, derivs: &mut Vec<f64>) {
    let mut p = LiftPoint::<T>::from_f64(x0);
    let mut d = 1.0;
    for _ in 0..steps {
        d *= fp.lift.deriv(p.frac.to_f64());
        p = p.step(fp);
        points.push(p.value());
        derivs.push(d);
    }
}

/// How the distortion constants were located.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnclosureMethod {
    pub grid_points: usize,
    pub refined_maxima: usize,
}

/// `M = ‖(log f')'‖` and `N = max(M, ‖(log (f^{-1})')'‖)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionConstants {
    pub m: f64,
    pub n: f64,
    /// `sup |f''| / f'^2`, the inverse-side constant.
    pub inverse_side: f64,
    pub method: EnclosureMethod,
}

pub fn distortion_constants(lift: &LiftDescriptor) -> Result<DistortionConstants> {
    if lift.min_derivative_lower_bound() <= 0.0 {
        return Err(Error::Domain("descriptor is not a diffeomorphism".into()));
    }
    if lift.is_rotation() {
        return Ok(DistortionConstants {
            m: 0.0,
            n: 0.0,
            inverse_side: 0.0,
            method: EnclosureMethod {
                grid_points: 0,
                refined_maxima: 0,
            },
        });
    }
    let log_deriv = |x: f64| (lift.deriv2(x) / lift.deriv(x)).abs();
    let inverse = |x: f64| {
        let d = lift.deriv(x);
        lift.deriv2(x).abs() / (d * d)
    };
    let maxima = 64;
    let g1 = PeriodicGrid::sample(DISTORTION_GRID, &log_deriv);
    let g2 = PeriodicGrid::sample(DISTORTION_GRID, &inverse);
    let refined = g1.local_extrema(Extremum::Max, maxima).len();
    let (_, m) = g1.refine(&log_deriv, Extremum::Max, maxima, 1e-13);
    let (_, inv) = g2.refine(&inverse, Extremum::Max, maxima, 1e-13);
    Ok(DistortionConstants {
        m,
        n: m.max(inv),
        inverse_side: inv,
        method: EnclosureMethod {
            grid_points: DISTORTION_GRID,
            refined_maxima: refined,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn arnold(k: f64, t: f64) -> FamilyPoint {
        FamilyPoint::new(LiftDescriptor::arnold(k).unwrap(), t)
    }

    #[test]
    fn identity_translation_and_unit_derivative() {
        let fp = FamilyPoint::new(LiftDescriptor::identity(), 0.3);
        assert_eq!(fp.eval(0.5, EvalOrder::Value), 0.8);
        for x in [-2.3, 0.0, 0.77] {
            assert_eq!(fp.eval(x, EvalOrder::First), 1.0);
        }
    }

    #[test]
    fn arnold_derivative_vanishing_cosine() {
        let fp = arnold(0.5, 0.0);
        assert_relative_eq!(fp.eval(0.25, EvalOrder::First), 1.0, epsilon = 1e-15);
        assert_relative_eq!(fp.eval(0.0, EvalOrder::First), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_diffeomorphisms() {
        assert!(LiftDescriptor::arnold(1.2).is_err());
        assert!(LiftDescriptor::from_coefficients("x", vec![0.0, 0.2], vec![]).is_err());
        // passes only through the padded grid test, not the crude sum bound
        let ok = LiftDescriptor::from_coefficients("two", vec![0.12], vec![0.05]).unwrap();
        assert!(ok.min_derivative_lower_bound() > 0.0);
        assert!(LiftDescriptor::identity().with_precision(40).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let raw = r#"{"family":"custom","coefficients":{"sin":[0.05],"cos":[0.0,0.01]},"precision":15}"#;
        let lift = LiftDescriptor::from_json_str(raw).unwrap();
        assert_eq!(lift.family(), "custom");
        assert_eq!(lift.cos_coefficients(), &[0.0, 0.01]);
        let back: serde_json::Value = serde_json::from_str(&lift.to_json_string()).unwrap();
        let orig: serde_json::Value = serde_json::from_str(raw).unwrap();
        assert_eq!(back, orig);
        assert!(LiftDescriptor::from_json_str(
            r#"{"family":"bad","coefficients":{"sin":[0.5]},"precision":15}"#
        )
        .is_err());
    }

    #[test]
    fn rotation_orbit_is_arithmetic_progression() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let fp = FamilyPoint::new(LiftDescriptor::identity(), alpha);
        let orbit = iterate(&fp, 0.0, 3).unwrap();
        assert_eq!(orbit.points, vec![0.0, alpha, 2.0 * alpha, 3.0 * alpha]);
    }

    #[test]
    fn forward_then_backward_returns_home() {
        for (k, t, x0) in [(0.5, 0.1, 0.3), (0.9, -0.37, 2.71), (0.95, 0.6, -0.4)] {
            let fp = arnold(k, t);
            let fwd = iterate(&fp, x0, 5).unwrap();
            let end = *fwd.points.last().unwrap();
            let back = iterate(&fp, end, -5).unwrap();
            assert!((back.points.last().unwrap() - x0).abs() < 1e-12);
            // backward derivative is the reciprocal of the forward one
            let prod = fwd.derivs.last().unwrap() * back.derivs.last().unwrap();
            assert_relative_eq!(prod, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn double_double_orbit_agrees_with_binary64() {
        let fp = arnold(0.9, 0.0);
        let fast = iterate(&fp, 0.1, 100).unwrap();
        let precise_fp = FamilyPoint::new(fp.lift.clone().with_precision(32).unwrap(), 0.0);
        let precise = iterate(&precise_fp, 0.1, 100).unwrap();
        let a = fast.points.last().unwrap();
        let b = precise.points.last().unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn cap_and_inverse_errors() {
        let fp = arnold(0.5, 0.0);
        assert!(matches!(
            iterate_with_cap(&fp, 0.0, -11, 10),
            Err(Error::CapExceeded { requested: 11, cap: 10 })
        ));
    }

    #[test]
    fn distortion_constants_closed_form() {
        let id = distortion_constants(&LiftDescriptor::identity()).unwrap();
        assert_eq!((id.m, id.n), (0.0, 0.0));
        for k in [0.5_f64, 0.9] {
            let dc = distortion_constants(&LiftDescriptor::arnold(k).unwrap()).unwrap();
            let closed = TAU * k / (1.0 - k * k).sqrt();
            assert_relative_eq!(dc.m, closed, max_relative = 1e-9);
            assert!(dc.n >= dc.m);
        }
        let dc = distortion_constants(&LiftDescriptor::arnold(0.9).unwrap()).unwrap();
        assert!((dc.m - 12.973).abs() < 1e-3);
    }

    #[test]
    fn reflection_negates_the_lift() {
        let lift = LiftDescriptor::from_coefficients("c", vec![0.05, 0.01], vec![0.02]).unwrap();
        let fp = FamilyPoint::new(lift, 0.17);
        let r = fp.reflected();
        for x in [-0.4, 0.1, 0.9, 1.3] {
            assert_relative_eq!(r.lift(x), -fp.lift(-x), epsilon = 1e-15);
        }
    }
}
