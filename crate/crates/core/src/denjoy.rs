//! Interval combinatorics of closest returns and the Denjoy distortion bound.
//!
//! Everything is computed on lifts in a normalized frame where the chosen
//! convergent satisfies `q_n α - p_n < 0`; when it does not, the family is
//! conjugated by `x ↦ -x` first (which flips the sign and keeps all lengths).
//! In that frame, with `F` the lift of the base map `f = f_{t0}`:
//!
//! ```text
//! L(x)  = [x, F^{-q_n}(x) + p_n]
//! K(x)  = [x, F^{q_{n-1}}(x) - p_{n-1}]
//! I_i   = [F(F_t^{i-1} x), F_t^i x]             i = 1..q_n
//! L̂(x)  = [x, F^{-q_n}(F_t^{q_n} x)]
//! ```
//!
//! where `t > 0` is the distance from `t0` to the plateau `ρ^{-1}(p_n/q_n)`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::{distortion_constants, iterate, DistortionConstants, FamilyPoint, LiftDescriptor};
use crate::cont_frac::{continued_fraction, Rational};
use crate::error::{Error, Result};
use crate::rotation::{rotation_enclosure, RotationEstimate, SolverConfig};
use crate::staircase::plateau_endpoints_with;

/// Overlap tolerance of the disjointness tests.
pub const OVERLAP_TOL: f64 = 1e-12;

const RHO_TOL: f64 = 1e-14;
const PLATEAU_TOL: f64 = 1e-13;
const RATIO_SAMPLES: usize = 64;
const HAT_ELL_SAMPLES: usize = 64;
const MAX_BACKWARD: i64 = 5_000_000;

/// A closed arc `[left, right]` of the circle in positive cyclic order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DynInterval {
    pub left: f64,
    pub right: f64,
    pub length: f64,
}

impl DynInterval {
    /// The arc from lifted points `a <= b`.
    pub fn from_lift(a: f64, b: f64) -> Self {
        Self {
            left: a.rem_euclid(1.0),
            right: b.rem_euclid(1.0),
            length: b - a,
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        let d = (z - self.left).rem_euclid(1.0);
        d <= self.length
    }
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    start: f64,
    len: f64,
    start_id: i64,
    end_id: i64,
}

/// Gaps between cyclically consecutive arcs, each flagged when the two
/// arcs share an orbit point as endpoint.
fn arc_gaps(arcs: &[Arc]) -> Vec<(f64, bool)> {
    let mut sorted: Vec<(f64, &Arc)> = arcs.iter().map(|a| (a.start.rem_euclid(1.0), a)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = sorted.len();
    (0..m)
        .map(|i| {
            let (s, cur) = sorted[i];
            let (mut s_next, next) = sorted[(i + 1) % m];
            if i + 1 == m {
                s_next += 1.0;
            }
            (s_next - (s + cur.len), cur.end_id == next.start_id)
        })
        .collect()
}

/// Lebesgue measure of a union of arcs.
pub fn union_measure(arcs: &[(f64, f64)]) -> f64 {
    let mut pieces = Vec::with_capacity(arcs.len() + 1);
    for &(start, len) in arcs {
        if len >= 1.0 {
            return 1.0;
        }
        let s = start.rem_euclid(1.0);
        if s + len > 1.0 {
            pieces.push((s, 1.0));
            pieces.push((0.0, s + len - 1.0));
        } else {
            pieces.push((s, s + len));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total.min(1.0)
}

/// Points `F^j(x)` for `j` in `-back..=fwd`.
struct Orbit {
    back: i64,
    pts: Vec<f64>,
}

impl Orbit {
    fn new(fp: &FamilyPoint, x: f64, back: i64, fwd: i64) -> Result<Self> {
        let fwd_seg = iterate(fp, x, fwd)?;
        let back_seg = iterate(fp, x, -back)?;
        let mut pts: Vec<f64> = back_seg.points.into_iter().rev().collect();
        pts.pop();
        pts.extend(fwd_seg.points);
        Ok(Self { back, pts })
    }

    fn at(&self, j: i64) -> f64 {
        self.pts[(j + self.back) as usize]
    }
}

/// The convergent data of `ρ(t0)` in the normalized frame.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergentFrame {
    /// Base map `f_{t0}` of the normalized frame.
    #[serde(skip)]
    pub base: FamilyPoint,
    #[serde(skip)]
    lift: LiftDescriptor,
    pub t0: f64,
    pub rho: RotationEstimate,
    /// `ρ(t0)` in the normalized frame (negated when reflected).
    pub alpha: f64,
    pub n_index: usize,
    /// `p_n / q_n` in the normalized frame.
    pub conv: Rational,
    pub prev: Rational,
    pub a_next: i64,
    pub reflected: bool,
    pub constants: DistortionConstants,
}

/// Closest-return convergents of `α` that every point of the enclosure shares.
fn shared_convergents(est: &RotationEstimate) -> Result<Vec<Rational>> {
    let conv = |a: f64| -> Result<Vec<Rational>> { Ok(continued_fraction(a, 64)?.closest_return_convergents()) };
    let lo = conv(est.lower())?;
    let hi = conv(est.upper())?;
    let mid = conv(est.value)?;
    let shared = lo
        .iter()
        .zip(hi.iter())
        .zip(mid.iter())
        .take_while(|((a, b), c)| a == b && b == c)
        .count();
    Ok(mid[..shared].to_vec())
}

impl ConvergentFrame {
    pub fn new(lift: &LiftDescriptor, t0: f64, n_index: usize) -> Result<Self> {
        let fp = FamilyPoint::new(lift.clone(), t0);
        let cfg = SolverConfig::for_point(&fp);
        let rho = rotation_enclosure(&fp, RHO_TOL, &cfg)?;
        if let Some(r) = rho.locked {
            return Err(Error::PreconditionFailed(format!("ρ({t0}) is locked at {r}")));
        }
        let conv = shared_convergents(&rho)?;
        if n_index == 0 || n_index + 1 >= conv.len() {
            return Err(Error::CombinatoricsViolation(format!(
                "convergent index {n_index} needs 1 <= n and n + 1 < {} resolved convergents",
                conv.len()
            )));
        }
        let (c, prev, next) = (conv[n_index], conv[n_index - 1], conv[n_index + 1]);
        let a_next = (next.q() - prev.q()) / c.q();
        let reflected = c.cmp_real(rho.value) == Ordering::Greater;
        let flip = |r: Rational| Rational::new(-r.p(), r.q()).expect("nonzero denominator");
        let (base, alpha, c, prev) = if reflected {
            (fp.reflected(), -rho.value, flip(c), flip(prev))
        } else {
            (fp, rho.value, c, prev)
        };
        if prev.cmp_real(alpha) != Ordering::Greater {
            return Err(Error::CombinatoricsViolation(format!(
                "{prev} and {c} are not on opposite sides of {alpha}"
            )));
        }
        Ok(Self {
            base,
            lift: lift.clone(),
            t0,
            rho,
            alpha,
            n_index,
            conv: c,
            prev,
            a_next,
            reflected,
            constants: distortion_constants(lift)?,
        })
    }

    pub fn q(&self) -> i64 {
        self.conv.q()
    }

    /// Maps a point of the original circle into the normalized frame.
    pub fn to_frame(&self, x: f64) -> f64 {
        if self.reflected {
            -x
        } else {
            x
        }
    }

    /// Smallest `t > 0` with `ρ = p_n/q_n` at `t0 + t` in the normalized frame.
    pub fn plateau_offset(&self, tol: f64) -> Result<f64> {
        let orig = if self.reflected {
            Rational::new(-self.conv.p(), self.conv.q())?
        } else {
            self.conv
        };
        let pl = plateau_endpoints_with(&self.lift, orig, tol, &SolverConfig::for_point(&self.base))?;
        let t = if self.reflected {
            self.t0 - pl.t_right
        } else {
            pl.t_left - self.t0
        };
        if !(t > 0.0) {
            return Err(Error::CombinatoricsViolation(format!(
                "plateau of {orig} does not lie on the expected side of t0 = {}",
                self.t0
            )));
        }
        Ok(t)
    }

    /// `L(x)`, `K(x)`, their images and the disjointness/containment margins.
    pub fn partition(&self, x: f64) -> Result<ReturnPartition> {
        let (q, p) = (self.conv.q(), self.conv.p());
        let (qp, pp) = (self.prev.q(), self.prev.p());
        let back = self.a_next.max(1).checked_mul(q).filter(|&b| b <= MAX_BACKWARD).ok_or_else(|| {
            Error::CombinatoricsViolation(format!("a_(n+1) q_n = {} q_n is too long to iterate", self.a_next))
        })?;
        let orb = Orbit::new(&self.base, x, back, q + qp)?;

        let l_arcs: Vec<Arc> = (0..q)
            .map(|j| {
                let a = orb.at(j);
                Arc {
                    start: a,
                    len: orb.at(j - q) + p as f64 - a,
                    start_id: j,
                    end_id: j - q,
                }
            })
            .collect();
        let k_arcs: Vec<Arc> = (0..q)
            .map(|j| {
                let a = orb.at(j);
                Arc {
                    start: a,
                    len: orb.at(j + qp) - pp as f64 - a,
                    start_id: j,
                    end_id: j + qp,
                }
            })
            .collect();
        let to_interval = |a: &Arc| DynInterval::from_lift(a.start, a.start + a.len);

        let e10 = arc_gaps(&l_arcs).iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
        let k_gaps = arc_gaps(&k_arcs);
        let e101 = k_gaps
            .iter()
            .filter(|g| !g.1)
            .map(|g| g.0)
            .fold(f64::INFINITY, f64::min);
        let abut_err = k_gaps.iter().filter(|g| g.1).map(|g| g.0.abs()).fold(0.0, f64::max);
        let abutting = k_gaps.iter().filter(|g| g.1).count();
        let e100 = (orb.at(qp) - pp as f64) - (orb.at(-self.a_next * q) + (self.a_next * p) as f64);

        let part = ReturnPartition {
            x,
            q_n: q,
            q_prev: qp,
            a_next: self.a_next,
            reflected: self.reflected,
            l: to_interval(&l_arcs[0]),
            k: to_interval(&k_arcs[0]),
            images_l: l_arcs.iter().map(to_interval).collect(),
            images_k: k_arcs.iter().map(to_interval).collect(),
            margins: Margins {
                e10,
                e100,
                e101,
                abutting_pairs: abutting,
                abutting_error: abut_err,
            },
        };
        let m = &part.margins;
        if m.e10 < -OVERLAP_TOL || m.e101 < -OVERLAP_TOL || m.e100 < -OVERLAP_TOL || m.abutting_error > OVERLAP_TOL
        {
            return Err(Error::CombinatoricsViolation(format!(
                "margins e10 {:e}, e100 {:e}, e101 {:e}, abutting error {:e}",
                m.e10, m.e100, m.e101, m.abutting_error
            )));
        }
        Ok(part)
    }

    /// The intervals `I_i(x)`, their pushed-forward lengths and `L̂(x)`.
    pub fn chain(&self, x: f64, t: f64) -> Result<ChainIntervals> {
        let (q, p) = (self.conv.q(), self.conv.p());
        let ft = self.base.at(self.base.t + t);
        let w = iterate(&ft, x, q)?.points;
        let mut intervals = Vec::with_capacity(q as usize);
        let mut tau = Vec::with_capacity(q as usize);
        for i in 1..=q as usize {
            let a = self.base.eval(w[i - 1], crate::circle_map::EvalOrder::Value);
            intervals.push(DynInterval::from_lift(a, w[i]));
            let steps = q - i as i64;
            let fa = *iterate(&self.base, a, steps)?.points.last().expect("nonempty orbit");
            let fb = *iterate(&self.base, w[i], steps)?.points.last().expect("nonempty orbit");
            tau.push(fb - fa);
        }
        let fq = *iterate(&self.base, x, q)?.points.last().expect("nonempty orbit");
        let wq = w[q as usize];
        let hat_end = *iterate(&self.base, wq, -q)?.points.last().expect("nonempty orbit");
        Ok(ChainIntervals {
            t,
            q,
            tau_sum: tau.iter().sum(),
            chain_span: wq - fq,
            containment_margin: x + p as f64 - wq,
            intervals,
            tau,
            hat_l: DynInterval::from_lift(x, hat_end),
            hat_ell: self.hat_ell(x, t)?,
        })
    }

    /// `m(∪_{j=1}^{q_n} f^j L̂(x))`.
    pub fn hat_ell(&self, x: f64, t: f64) -> Result<f64> {
        let q = self.conv.q();
        let ft = self.base.at(self.base.t + t);
        let wq = *iterate(&ft, x, q)?.points.last().expect("nonempty orbit");
        let z = *iterate(&self.base, wq, -q)?.points.last().expect("nonempty orbit");
        let left = iterate(&self.base, x, q)?.points;
        let right = iterate(&self.base, z, q)?.points;
        let arcs: Vec<(f64, f64)> = (1..=q as usize).map(|j| (left[j], right[j] - left[j])).collect();
        Ok(union_measure(&arcs))
    }

    /// `F^{-ν q_n}(x)` in the normalized frame.
    pub fn back_return(&self, x: f64, nu: i64) -> Result<f64> {
        Ok(*iterate(&self.base, x, -nu * self.conv.q())?.points.last().expect("nonempty orbit"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margins {
    /// Smallest gap between the arcs `f^j L(x)`, `0 <= j < q_n`.
    pub e10: f64,
    /// `K(x)` right end minus the right end of `∪_ν f^{-ν q_n} L(x)`.
    pub e100: f64,
    /// Smallest gap between arcs `f^j K(x)` that do not share an endpoint.
    pub e101: f64,
    /// Pairs `f^j K`, `f^{j + q_{n-1}} K` that meet at a common orbit point.
    pub abutting_pairs: usize,
    /// Largest distance between the common endpoints of abutting pairs.
    pub abutting_error: f64,
}

impl Margins {
    pub fn min(&self) -> f64 {
        self.e10.min(self.e100).min(self.e101)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnPartition {
    pub x: f64,
    pub q_n: i64,
    pub q_prev: i64,
    pub a_next: i64,
    pub reflected: bool,
    pub l: DynInterval,
    pub k: DynInterval,
    pub images_l: Vec<DynInterval>,
    pub images_k: Vec<DynInterval>,
    pub margins: Margins,
}

pub fn return_partition(lift: &LiftDescriptor, t0: f64, x: f64, n_index: usize) -> Result<ReturnPartition> {
    let frame = ConvergentFrame::new(lift, t0, n_index)?;
    frame.partition(frame.to_frame(x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainIntervals {
    pub t: f64,
    pub q: i64,
    /// `I_i(x)`, `i = 1..q`; each has length `t`.
    pub intervals: Vec<DynInterval>,
    /// Lengths of `f^{q-i} I_i(x)`.
    pub tau: Vec<f64>,
    pub tau_sum: f64,
    /// `F_t^q(x) - F^q(x)`, which `tau_sum` must reproduce.
    pub chain_span: f64,
    /// `x + p - F_t^q(x)`: room left inside `f^q L(x)`.
    pub containment_margin: f64,
    pub hat_l: DynInterval,
    pub hat_ell: f64,
}

pub fn chain_intervals(lift: &LiftDescriptor, t0: f64, x: f64, n_index: usize) -> Result<ChainIntervals> {
    let frame = ConvergentFrame::new(lift, t0, n_index)?;
    let t = frame.plateau_offset(PLATEAU_TOL)?;
    frame.chain(frame.to_frame(x), t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionRatio {
    pub max_ratio: f64,
    pub bound: f64,
    /// `Σ_{j<n} |f^j J|`.
    pub total_length: f64,
    pub holds: bool,
}

/// Largest ratio `(f^n)'(y) / (f^n)'(z)` over a 64-point grid of `J`,
/// against the distortion bound `exp(M Σ |f^j J|)`.
pub fn distortion_ratio(fp: &FamilyPoint, j: &DynInterval, n: i64, m: f64) -> Result<DistortionRatio> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let a = j.left;
    let b = j.left + j.length;
    let ends_a = iterate(fp, a, n)?.points;
    let ends_b = iterate(fp, b, n)?.points;
    let arcs: Vec<Arc> = (0..n as usize)
        .map(|k| Arc {
            start: ends_a[k],
            len: ends_b[k] - ends_a[k],
            start_id: k as i64,
            end_id: -1 - k as i64,
        })
        .collect();
    let min_gap = if arcs.len() > 1 {
        arc_gaps(&arcs).iter().map(|g| g.0).fold(f64::INFINITY, f64::min)
    } else {
        1.0 - arcs[0].len
    };
    if min_gap < -OVERLAP_TOL {
        return Err(Error::PreconditionFailed(format!("iterates of J overlap by {:e}", -min_gap)));
    }
    let total_length: f64 = arcs.iter().map(|a| a.len).sum();
    let derivs: Vec<f64> = (0..RATIO_SAMPLES)
        .into_par_iter()
        .map(|k| {
            let y = a + j.length * k as f64 / (RATIO_SAMPLES - 1) as f64;
            iterate(fp, y, n).map(|o| *o.derivs.last().expect("nonempty orbit"))
        })
        .collect::<Result<_>>()?;
    let hi = derivs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = derivs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = hi / lo;
    let bound = (m * total_length).exp();
    Ok(DistortionRatio {
        max_ratio,
        bound,
        total_length,
        holds: max_ratio <= bound * (1.0 + 1e-12),
    })
}

pub fn distortion_ratio_check(lift: &LiftDescriptor, t0: f64, j: &DynInterval, n: i64) -> Result<DistortionRatio> {
    let m = distortion_constants(lift)?.m;
    distortion_ratio(&FamilyPoint::new(lift.clone(), t0), j, n, m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HatEllCheck {
    pub x: f64,
    pub pq: Rational,
    /// Distance from `t0` to the plateau of `p_n/q_n`.
    pub t: f64,
    pub hat_ell: f64,
    /// Largest `l̂` over the sampled base points (the given `x` included).
    pub hat_ell_max: f64,
    pub quotient: f64,
    /// `radius(ρ(t0)) / t`.
    pub uncertainty: f64,
    /// `exp(-M l̂_max)`.
    pub bound: f64,
    pub bound_em: f64,
    /// `Σ_{ν < a_{n+1}} l̂(f^{-ν q_n} x)`, at most one.
    pub chain_sum: f64,
    /// `max_ν l̂(x) / l̂(f^{-ν q_n} x)` over `0 < ν < a_{n+1}`, at most `e^N`.
    pub chain_ratio: f64,
    pub e_n: f64,
    pub a_next: i64,
    pub holds: bool,
}

pub fn hat_ell_bound_check(lift: &LiftDescriptor, t0: f64, x: f64, n_index: usize) -> Result<HatEllCheck> {
    let frame = ConvergentFrame::new(lift, t0, n_index)?;
    frame.hat_ell_check(frame.to_frame(x))
}

impl ConvergentFrame {
    pub fn hat_ell_check(&self, x: f64) -> Result<HatEllCheck> {
        let t = self.plateau_offset(PLATEAU_TOL)?;
        let hat_ell = self.hat_ell(x, t)?;
        let sampled: Vec<f64> = (0..HAT_ELL_SAMPLES)
            .into_par_iter()
            .map(|k| self.hat_ell(k as f64 / HAT_ELL_SAMPLES as f64, t))
            .collect::<Result<_>>()?;
        let hat_ell_max = sampled.into_iter().fold(hat_ell, f64::max);

        let mut chain_sum = hat_ell;
        let mut chain_ratio: f64 = 1.0;
        for nu in 1..self.a_next {
            let h = self.hat_ell(self.back_return(x, nu)?, t)?;
            chain_sum += h;
            chain_ratio = chain_ratio.max(hat_ell / h);
        }

        let m = self.constants.m;
        let quotient = (self.conv.value() - self.alpha) / t;
        let uncertainty = self.rho.radius / t;
        let bound = (-m * hat_ell_max).exp();
        let e_n = self.constants.n.exp();
        let holds = quotient + uncertainty >= bound
            && hat_ell <= 1.0
            && chain_sum <= 1.0 + OVERLAP_TOL
            && chain_ratio <= e_n * (1.0 + 1e-12);
        Ok(HatEllCheck {
            x,
            pq: self.conv,
            t,
            hat_ell,
            hat_ell_max,
            quotient,
            uncertainty,
            bound,
            bound_em: (-m).exp(),
            chain_sum,
            chain_ratio,
            e_n,
            a_next: self.a_next,
            holds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cont_frac::circle_distance;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn union_measure_merges_and_wraps() {
        assert!((union_measure(&[(0.1, 0.2), (0.25, 0.1)]) - 0.25).abs() < 1e-15);
        assert!((union_measure(&[(0.9, 0.2), (0.05, 0.1)]) - 0.25).abs() < 1e-15);
        assert_eq!(union_measure(&[(0.3, 0.0)]), 0.0);
    }

    #[test]
    fn rotation_partition_margins_match_closest_returns() {
        let a = golden();
        let id = LiftDescriptor::identity();
        // q = 5 is index 3 of 1, 2, 3, 5, 8, ...
        let part = return_partition(&id, a, 0.0, 3).unwrap();
        assert_eq!((part.q_n, part.q_prev, part.a_next), (5, 3, 1));
        let expect = circle_distance(8.0 * a);
        assert!((part.margins.e10 - expect).abs() < 1e-12, "{:?}", part.margins);
        assert!((part.margins.e100 - expect).abs() < 1e-12);
        assert!((part.margins.e101 - circle_distance(5.0 * a)).abs() < 1e-12);
        assert!(part.margins.abutting_error < 1e-12);
        assert_eq!(part.margins.abutting_pairs, 2);
        // 5α - 3 > 0, so the frame is reflected and the rotation is by -α
        assert!(part.reflected);
        for (j, img) in part.images_l.iter().enumerate() {
            let j = j as f64;
            assert!((img.left - (-j * a).rem_euclid(1.0)).abs() < 1e-12);
            assert!((img.length - circle_distance(5.0 * a)).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_distortion_is_trivial() {
        let id = LiftDescriptor::identity();
        let j = DynInterval::from_lift(0.0, 0.05);
        let r = distortion_ratio_check(&id, golden(), &j, 8).unwrap();
        assert_eq!(r.max_ratio, 1.0);
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn overlapping_iterates_are_rejected() {
        let id = LiftDescriptor::identity();
        let j = DynInterval::from_lift(0.0, 0.3);
        assert!(matches!(
            distortion_ratio_check(&id, golden(), &j, 8),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn identity_hat_ell_quotient_is_one() {
        let id = LiftDescriptor::identity();
        for n in 2..6 {
            let c = hat_ell_bound_check(&id, golden(), 0.0, n).unwrap();
            assert!((c.quotient - 1.0).abs() < 1e-9, "{c:?}");
            assert_eq!(c.bound, 1.0);
            assert!(c.holds);
        }
    }
}
