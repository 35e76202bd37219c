//! Continued fractions, convergents and closest returns.
//!
//! Expansion of a binary64 number is done with exact sign tests: the sign of
//! `qα - p` is computed by a single fused multiply-add, which is exact for
//! `p, q < 2^53`. Partial quotients are therefore those of the dyadic
//! rational actually stored, cut off once the residual drops below the
//! representation noise floor `q_k² ε` (times a small safety factor).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EXACT_LIMIT: i64 = 1 << 53;

/// Safety factor on the `q_k² ε` cutoff.
const NOISE_FACTOR: f64 = 16.0;

/// `p / q` in lowest terms with `q > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    p: i64,
    q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Rational {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = gcd(p, q).max(1);
        let s = q.signum();
        Ok(Self {
            p: s * p / g,
            q: s * q / g,
        })
    }

    /// `p/q` in lowest terms for `q > 0`.
    fn reduced(p: i64, q: i64) -> Self {
        let g = gcd(p, q).max(1);
        Self { p: p / g, q: q / g }
    }

    pub fn integer(n: i64) -> Self {
        Self { p: n, q: 1 }
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `(p + p') / (q + q')`, reduced (already in lowest terms for Farey neighbours).
    pub fn mediant(&self, other: &Rational) -> Rational {
        Rational::reduced(self.p + other.p, self.q + other.q)
    }

    /// `(p + k p') / (q + k q')`, the k-th fraction walking from `self` to `other`.
    pub fn towards(&self, other: &Rational, k: i64) -> Rational {
        Rational::reduced(self.p + k * other.p, self.q + k * other.q)
    }

    /// Exact sign of `α - p/q` for binary64 `α` (exact while `|p|, q < 2^53`).
    pub fn cmp_real(&self, alpha: f64) -> Ordering {
        let e = (self.q as f64).mul_add(alpha, -(self.p as f64));
        e.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("not a rational: {s:?}"));
        match s.split_once('/') {
            Some((p, q)) => Rational::new(
                p.trim().parse().map_err(|_| bad())?,
                q.trim().parse().map_err(|_| bad())?,
            ),
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// A number to expand: a binary64 value or an exact ratio of integers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Real(f64),
    Exact { num: i128, den: i128 },
}

impl From<f64> for Alpha {
    fn from(x: f64) -> Self {
        Alpha::Real(x)
    }
}

impl From<Rational> for Alpha {
    fn from(r: Rational) -> Self {
        Alpha::Exact {
            num: r.p as i128,
            den: r.q as i128,
        }
    }
}

impl Alpha {
    pub fn approx(&self) -> f64 {
        match *self {
            Alpha::Real(x) => x,
            Alpha::Exact { num, den } => num as f64 / den as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuedFraction {
    /// Partial quotients `a_0; a_1, a_2, ...`.
    pub a: Vec<i64>,
    pub convergents: Vec<Rational>,
    /// The expansion terminated because the input is that rational.
    pub exact: bool,
}

impl ContinuedFraction {
    /// Expansion of the quadratic irrational `(m + √d) / den`, computed with
    /// integers only. Requires `den > 0`, `d` not a square and `den | d - m²`.
    pub fn quadratic(m: i64, d: i64, den: i64, terms: usize) -> Result<Self> {
        let s = isqrt(d);
        if den <= 0 || s * s == d || (d - m * m) % den != 0 {
            return Err(Error::Domain(format!("({m} + sqrt {d}) / {den} is not in reduced form")));
        }
        let (mut m, mut den) = (m, den);
        let mut a = Vec::with_capacity(terms);
        for _ in 0..terms {
            let q = (m + s).div_euclid(den);
            a.push(q);
            m = q * den - m;
            den = (d - m * m) / den;
        }
        let convergents = convergents_of(&a).ok_or_else(|| Error::Domain("convergent overflow".into()))?;
        let n = convergents.len();
        a.truncate(n);
        Ok(Self {
            a,
            convergents,
            exact: false,
        })
    }

    /// Convergents realizing closest returns. These are the convergents
    /// `p_k/q_k`, except that `p_0/q_0` is dropped when `q_1 = 1` (then the
    /// nearest integer to `α` is `p_1`).
    pub fn closest_return_convergents(&self) -> Vec<Rational> {
        let mut out = Vec::with_capacity(self.convergents.len());
        for (k, c) in self.convergents.iter().enumerate() {
            if k == 0 && self.convergents.get(1).is_some_and(|c1| c1.q == 1) {
                continue;
            }
            out.push(*c);
        }
        out
    }
}

fn isqrt(n: i64) -> i64 {
    let mut s = (n as f64).sqrt() as i64;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

fn convergents_of(a: &[i64]) -> Option<Vec<Rational>> {
    let (mut p2, mut q2, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut out = Vec::with_capacity(a.len());
    for &ak in a {
        let p = ak.checked_mul(p1)?.checked_add(p2)?;
        let q = ak.checked_mul(q1)?.checked_add(q2)?;
        out.push(Rational { p, q });
        (p2, q2, p1, q1) = (p1, q1, p, q);
    }
    Some(out)
}

/// Continued fraction expansion of `alpha`, at most `max_terms` quotients.
pub fn continued_fraction(alpha: impl Into<Alpha>, max_terms: usize) -> Result<ContinuedFraction> {
    if max_terms == 0 {
        return Err(Error::Domain("max_terms must be at least 1".into()));
    }
    match alpha.into() {
        Alpha::Real(x) => real_expansion(x, max_terms),
        Alpha::Exact { num, den } => exact_expansion(num, den, max_terms),
    }
}

fn real_expansion(alpha: f64, max_terms: usize) -> Result<ContinuedFraction> {
    if !alpha.is_finite() || alpha.abs() >= EXACT_LIMIT as f64 {
        return Err(Error::Domain(format!("cannot expand {alpha}")));
    }
    let a0 = alpha.floor() as i64;
    let mut a = vec![a0];
    let mut convergents = vec![Rational { p: a0, q: 1 }];
    // e_k = q_k α - p_k, seeds e_{-1} = -1, e_0 = α - a_0
    let mut e_prev = -1.0_f64;
    let mut e_cur = alpha - a0 as f64;
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p_cur, mut q_cur) = (a0, 1i64);
    if e_cur == 0.0 {
        return Ok(ContinuedFraction {
            a,
            convergents,
            exact: true,
        });
    }
    let sign_at = |k: i64, p_prev: i64, q_prev: i64, p_cur: i64, q_cur: i64| -> Option<Ordering> {
        let q = q_prev.checked_add(k.checked_mul(q_cur)?)?;
        let p = p_prev.checked_add(k.checked_mul(p_cur)?)?;
        if q >= EXACT_LIMIT || p.abs() >= EXACT_LIMIT {
            return None;
        }
        Some(Rational { p, q }.cmp_real(alpha))
    };
    while a.len() < max_terms {
        let residual = (e_cur / e_prev).abs();
        let qf = q_cur as f64;
        if a.len() >= 2 && residual < NOISE_FACTOR * qf * qf * f64::EPSILON {
            break;
        }
        let prev_sign = if e_prev > 0.0 { Ordering::Greater } else { Ordering::Less };
        // largest k with sign(e_prev + k e_cur) equal to sign(e_prev) or zero
        let keeps = |k: i64| -> Option<bool> {
            let s = sign_at(k, p_prev, q_prev, p_cur, q_cur)?;
            Some(s == prev_sign || s == Ordering::Equal)
        };
        let est = (e_prev / e_cur).abs().floor();
        if !(est < EXACT_LIMIT as f64) {
            break;
        }
        let mut k = (est as i64).max(1);
        let mut overflow = false;
        loop {
            match keeps(k) {
                Some(false) if k > 1 => k -= 1,
                Some(_) => break,
                None => {
                    overflow = true;
                    break;
                }
            }
        }
        while !overflow {
            match keeps(k + 1) {
                Some(true) => k += 1,
                Some(false) => break,
                None => overflow = true,
            }
        }
        if overflow {
            break;
        }
        let p_next = p_prev + k * p_cur;
        let q_next = q_prev + k * q_cur;
        let next = Rational { p: p_next, q: q_next };
        let terminal = next.cmp_real(alpha) == Ordering::Equal;
        a.push(k);
        convergents.push(next);
        if terminal {
            return Ok(ContinuedFraction {
                a,
                convergents,
                exact: true,
            });
        }
        e_prev = e_cur;
        e_cur = (q_next as f64).mul_add(alpha, -(p_next as f64));
        (p_prev, q_prev, p_cur, q_cur) = (p_cur, q_cur, p_next, q_next);
    }
    Ok(ContinuedFraction {
        a,
        convergents,
        exact: false,
    })
}

fn exact_expansion(num: i128, den: i128, max_terms: usize) -> Result<ContinuedFraction> {
    if den == 0 {
        return Err(Error::Domain("zero denominator".into()));
    }
    let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
    let mut a = Vec::new();
    let (mut p2, mut q2, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut convergents = Vec::new();
    loop {
        let ak = n.div_euclid(d);
        let r = n.rem_euclid(d);
        let p = ak * p1 + p2;
        let q = ak * q1 + q2;
        if p.abs() > i64::MAX as i128 || q > i64::MAX as i128 || ak.abs() > i64::MAX as i128 {
            return Ok(ContinuedFraction {
                a,
                convergents,
                exact: false,
            });
        }
        a.push(ak as i64);
        convergents.push(Rational {
            p: p as i64,
            q: q as i64,
        });
        if r == 0 {
            return Ok(ContinuedFraction {
                a,
                convergents,
                exact: true,
            });
        }
        if a.len() >= max_terms {
            return Ok(ContinuedFraction {
                a,
                convergents,
                exact: false,
            });
        }
        (p2, q2, p1, q1) = (p1, q1, p, q);
        (n, d) = (d, r);
    }
}

/// `|x|_{S^1}`, the distance from `x` to the nearest integer.
pub fn circle_distance(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClosestReturn {
    pub q: i64,
    pub p: i64,
    /// Sign of `qα - p`.
    pub sign: i8,
}

const BRUTE_FORCE_LIMIT: i64 = 10_000;

/// All closest returns `q <= q_max` of `alpha`.
///
/// For `q_max <= 10^4` every `q` is checked directly against all smaller
/// multiples; above that the answer is read off the convergents.
pub fn closest_returns(alpha: f64, q_max: i64) -> Result<Vec<ClosestReturn>> {
    if q_max < 1 {
        return Err(Error::Domain("q_max must be at least 1".into()));
    }
    let cf = continued_fraction(alpha, 200)?;
    if let Some(last) = cf.convergents.last() {
        let noise_limited = !cf.exact && cf.a.len() < 200;
        if (cf.exact || noise_limited) && last.q <= q_max {
            return Err(Error::DegenerateInput(format!(
                "{alpha} is numerically the rational {last} (denominator <= {q_max})"
            )));
        }
    }
    if q_max <= BRUTE_FORCE_LIMIT {
        Ok(closest_returns_brute_force(alpha, q_max))
    } else {
        Ok(closest_returns_from(&cf, alpha, q_max))
    }
}

pub fn closest_returns_brute_force(alpha: f64, q_max: i64) -> Vec<ClosestReturn> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for q in 1..=q_max {
        let x = q as f64 * alpha;
        let d = circle_distance(x);
        if d < best {
            best = d;
            let p = x.round() as i64;
            out.push(ClosestReturn {
                q,
                p,
                sign: if x >= p as f64 { 1 } else { -1 },
            });
        }
    }
    out
}

pub fn closest_returns_from(cf: &ContinuedFraction, alpha: f64, q_max: i64) -> Vec<ClosestReturn> {
    cf.closest_return_convergents()
        .into_iter()
        .filter(|c| c.q <= q_max)
        .map(|c| ClosestReturn {
            q: c.q,
            p: c.p,
            sign: match c.cmp_real(alpha) {
                Ordering::Less => -1,
                _ => 1,
            },
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergentTest {
    /// `|α - p/q| < q^{-d}`.
    pub holds_hypothesis: bool,
    pub is_convergent: bool,
    pub distance: f64,
    pub threshold: f64,
}

impl ConvergentTest {
    /// The hypothesis implies the conclusion.
    pub fn implication_holds(&self) -> bool {
        !self.holds_hypothesis || self.is_convergent
    }
}

/// Check the convergent criterion `|α - p/q| < q^{-d}` (with `d > 3`,
/// `q > 1`) against the actual list of convergents of `α`.
pub fn convergent_test(alpha: impl Into<Alpha>, pq: Rational, d: f64) -> Result<ConvergentTest> {
    if pq.q <= 1 || !(d > 3.0) {
        return Err(Error::PreconditionFailed(format!("need q > 1 and d > 3, got {pq}, d = {d}")));
    }
    let alpha = alpha.into();
    let q = pq.q as f64;
    let threshold = q.powf(-d);
    let (holds_hypothesis, distance) = match alpha {
        Alpha::Real(x) => {
            let dist = (q.mul_add(x, -(pq.p as f64))).abs() / q;
            (dist < threshold, dist)
        }
        Alpha::Exact { num, den } => {
            let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
            // |num q - p den| / (den q) < q^{-d}, compared in logarithms
            let diff = num
                .checked_mul(pq.q as i128)
                .and_then(|a| (pq.p as i128).checked_mul(den).map(|b| (a - b).abs()));
            match diff {
                Some(0) => (true, 0.0),
                Some(diff) => {
                    let log_dist = (diff as f64).ln() - (den as f64).ln() - q.ln();
                    (log_dist < -d * q.ln(), log_dist.exp())
                }
                None => {
                    let dist = (num as f64 / den as f64 - pq.value()).abs();
                    (dist < threshold, dist)
                }
            }
        }
    };
    let cf = continued_fraction(alpha, 200)?;
    let is_convergent = cf.closest_return_convergents().contains(&pq);
    Ok(ConvergentTest {
        holds_hypothesis,
        is_convergent,
        distance,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn circle_distance_examples() {
        assert!((circle_distance(0.7) - 0.3).abs() < 1e-15);
        assert_eq!(circle_distance(0.25), 0.25);
        assert_eq!(circle_distance(3.0), 0.0);
        assert!((circle_distance(-0.9) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn golden_mean_is_fibonacci() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let cf = continued_fraction(golden, 8).unwrap();
        assert_eq!(cf.a, vec![0, 1, 1, 1, 1, 1, 1, 1]);
        let expect = [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21)];
        let got: Vec<_> = cf.convergents.iter().map(|c| (c.p(), c.q())).collect();
        assert_eq!(got, expect);
        assert!(!cf.exact);
    }

    #[test]
    fn three_quarters_terminates() {
        let cf = continued_fraction(r(3, 4), 10).unwrap();
        assert_eq!(cf.a, vec![0, 1, 3]);
        assert!(cf.exact);
        let cf = continued_fraction(0.75, 10).unwrap();
        assert_eq!(cf.a, vec![0, 1, 3]);
        assert!(cf.exact);
    }

    #[test]
    fn sqrt_two_minus_one() {
        let cf = continued_fraction(2f64.sqrt() - 1.0, 5).unwrap();
        assert_eq!(cf.a, vec![0, 2, 2, 2, 2]);
        let got: Vec<_> = cf.convergents.iter().map(|c| (c.p(), c.q())).collect();
        assert_eq!(got, [(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]);
    }

    #[test]
    fn quadratic_irrational_paths() {
        let golden = ContinuedFraction::quadratic(-1, 5, 2, 12).unwrap();
        assert_eq!(golden.a, vec![0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
        let root2 = ContinuedFraction::quadratic(-1, 2, 1, 6).unwrap();
        assert_eq!(root2.a, vec![0, 2, 2, 2, 2, 2]);
        // sqrt(7) = [2; 1, 1, 1, 4]
        let root7 = ContinuedFraction::quadratic(0, 7, 1, 9).unwrap();
        assert_eq!(root7.a, vec![2, 1, 1, 1, 4, 1, 1, 1, 4]);
        assert!(ContinuedFraction::quadratic(0, 9, 1, 3).is_err());
    }

    #[test]
    fn float_expansion_matches_exact_golden_until_the_noise_floor() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let cf = continued_fraction(golden, 200).unwrap();
        let exact = ContinuedFraction::quadratic(-1, 5, 2, cf.a.len()).unwrap();
        assert_eq!(cf.a, exact.a);
        let q = cf.convergents.last().unwrap().q() as f64;
        // stopped near q ~ 1/sqrt(eps)
        assert!(q > 1e6 && q < 1e9, "q = {q}");
    }

    #[test]
    fn closest_returns_examples() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let qs: Vec<_> = closest_returns(golden, 20).unwrap().iter().map(|c| c.q).collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8, 13]);
        let signs: Vec<_> = closest_returns(golden, 20).unwrap().iter().map(|c| c.sign).collect();
        for w in signs.windows(2) {
            assert_eq!(w[0], -w[1]);
        }
        let pi_inv = 1.0 / std::f64::consts::PI;
        let qs: Vec<_> = closest_returns(pi_inv, 30).unwrap().iter().map(|c| c.q).collect();
        assert_eq!(qs, vec![1, 3, 22]);
        let qs: Vec<_> = closest_returns(0.5 - 1e-9, 10).unwrap().iter().map(|c| c.q).collect();
        assert_eq!(qs, vec![1, 2]);
    }

    #[test]
    fn closest_returns_reject_rationals() {
        assert!(matches!(closest_returns(0.75, 10), Err(Error::DegenerateInput(_))));
        assert!(closest_returns(0.75, 3).is_ok());
    }

    #[test]
    fn convergent_test_examples() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let t = convergent_test(golden, r(5, 8), 3.5).unwrap();
        assert!(!t.holds_hypothesis);
        assert!((t.distance - 6.966e-3).abs() < 1e-5);

        // 0.1 + 0.01 + 1e-6 + 1e-24, exactly
        let den: i128 = 10i128.pow(24);
        let num: i128 = 10i128.pow(23) + 10i128.pow(22) + 10i128.pow(18) + 1;
        let t = convergent_test(Alpha::Exact { num, den }, r(110_001, 1_000_000), 3.5).unwrap();
        assert!(t.holds_hypothesis && t.is_convergent);

        let t = convergent_test(0.5 + 1.0 / 512.0, r(1, 2), 3.5).unwrap();
        assert!(t.holds_hypothesis && t.is_convergent);
        assert!(convergent_test(golden, r(1, 1), 3.5).is_err());
        assert!(convergent_test(golden, r(1, 2), 3.0).is_err());
    }

    #[test]
    fn rational_parsing_and_normalization() {
        assert_eq!("6/-8".parse::<Rational>().unwrap(), r(-3, 4));
        assert_eq!("5".parse::<Rational>().unwrap(), r(5, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert_eq!(r(1, 3).mediant(&r(1, 2)), r(2, 5));
    }
}
