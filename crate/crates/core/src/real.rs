//! Scalar types used by the orbit kernels.
//!
//! Everything that iterates a lift is generic over [`Real`], so the same
//! code runs in binary64 or in double-double ([`DoubleDouble`], roughly 32
//! significant decimal digits). Only the operations a trigonometric lift
//! needs are provided.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn floor(self) -> Self;
    /// `(sin 2πx, cos 2πx)`.
    fn sin_cos_2pi(self) -> (Self, Self);

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn floor(self) -> Self {
        f64::floor(self)
    }

    #[inline]
    fn sin_cos_2pi(self) -> (Self, Self) {
        let r = self - self.round();
        (std::f64::consts::TAU * r).sin_cos()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const TAU_DD: DoubleDouble = DoubleDouble {
    hi: 6.283_185_307_179_586,
    lo: 2.449_293_598_294_706_4e-16,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Round to the nearest integer (ties away from zero on `hi`).
    pub fn round(self) -> Self {
        let r = self.hi.round();
        if r == self.hi {
            let lo = self.lo.round();
            Self::new(r, lo)
        } else if (r - self.hi).abs() == 0.5 {
            // hi sits on a tie; lo decides the direction.
            if self.lo > 0.0 && r < self.hi {
                Self::new(r + 1.0, 0.0)
            } else if self.lo < 0.0 && r > self.hi {
                Self::new(r - 1.0, 0.0)
            } else {
                Self::new(r, 0.0)
            }
        } else {
            Self::new(r, 0.0)
        }
    }

    fn sin_cos_taylor(theta: Self) -> (Self, Self) {
        // |theta| <= pi/4; 28 terms take the tail below 1e-34.
        let t2 = theta * theta;
        let mut sin = theta;
        let mut cos = Self::ONE;
        let mut s_term = theta;
        let mut c_term = Self::ONE;
        let mut k = 1.0_f64;
        loop {
            s_term = -(s_term * t2) / Self::from_f64((2.0 * k) * (2.0 * k + 1.0));
            c_term = -(c_term * t2) / Self::from_f64((2.0 * k - 1.0) * (2.0 * k));
            sin = sin + s_term;
            cos = cos + c_term;
            if s_term.hi.abs() < 1e-34 && c_term.hi.abs() < 1e-34 {
                break;
            }
            k += 1.0;
            if k > 40.0 {
                break;
            }
        }
        (sin, cos)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi, self.lo)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}

impl Real for DoubleDouble {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn from_i64(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Self::new(hi, lo)
    }

    fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Self::new(fh, self.lo.floor())
        } else {
            Self { hi: fh, lo: 0.0 }
        }
    }

    fn sin_cos_2pi(self) -> (Self, Self) {
        let r = self - self.round();
        // quadrant reduction to |s| <= 1/8
        let j = (r.hi * 4.0).round();
        let s = r - Self::from_f64(j / 4.0);
        let (sn, cs) = Self::sin_cos_taylor(TAU_DD * s);
        match j as i64 {
            0 => (sn, cs),
            1 => (cs, -sn),
            -1 => (-cs, sn),
            _ => (-sn, -cs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_prod_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let (p, e) = two_prod(a, a);
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn dd_division_recovers_third() {
        let third = DoubleDouble::ONE / DoubleDouble::from_f64(3.0);
        let back = third * DoubleDouble::from_f64(3.0) - DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn dd_sin_cos_matches_f64_and_pythagoras() {
        for i in 0..200 {
            let x = -3.0 + i as f64 * 0.0371;
            let (s, c) = DoubleDouble::from_f64(x).sin_cos_2pi();
            let (sf, cf) = x.sin_cos_2pi();
            assert!((s.to_f64() - sf).abs() < 1e-14, "x={x}");
            assert!((c.to_f64() - cf).abs() < 1e-14, "x={x}");
            let one = s * s + c * c - DoubleDouble::ONE;
            assert!(one.to_f64().abs() < 1e-30, "x={x} residual {}", one);
        }
    }

    #[test]
    fn dd_sin_of_sixth_turn() {
        // sin(pi/3) = sqrt(3)/2; check against a double-double sqrt(3)/2
        let x = DoubleDouble::ONE / DoubleDouble::from_f64(6.0);
        let (s, _) = x.sin_cos_2pi();
        let three_quarters = s * s;
        let err = three_quarters - DoubleDouble::from_f64(0.75);
        assert!(err.to_f64().abs() < 1e-30);
    }

    #[test]
    fn dd_floor_and_round() {
        let x = DoubleDouble::new(3.0, -1e-20);
        assert_eq!(x.floor().to_f64(), 2.0);
        assert_eq!(x.round().to_f64(), 3.0);
        let y = DoubleDouble::new(2.5, 1e-20);
        assert_eq!(y.round().to_f64(), 3.0);
        let z = DoubleDouble::new(-2.5, 1e-20);
        assert_eq!(z.round().to_f64(), -2.0);
    }
}
