//! Averages against the invariant measure, conjugacies to the rotation read
//! off from orbit order, and the derivative identities they lead to.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::{invert, CircleLift, FamilyPoint, LiftDescriptor, LiftPoint, ITERATE_CAP};
use crate::cont_frac::Rational;
use crate::error::{Error, Result};
use crate::real::{DoubleDouble, Real};
use crate::rotation::{rotation_enclosure, RotationEstimate, SolverConfig};

/// Functions that can be averaged along an orbit.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `log f'`.
    LogDerivative,
    /// `(f^i)' ∘ f^j`.
    IterDerivative { i: u32, j: u32 },
    /// `Id - f^q + p`, whose mean is `p - qα`.
    ReturnDisplacement(Rational),
    /// Values on the uniform grid `k / len`, interpolated linearly.
    Grid(Vec<f64>),
}

impl Observable {
    pub fn tag(&self) -> String {
        match self {
            Observable::LogDerivative => "log_fprime".into(),
            Observable::IterDerivative { i, j } => format!("iter_deriv({i},{j})"),
            Observable::ReturnDisplacement(r) => format!("id_minus_f^q({r})"),
            Observable::Grid(v) => format!("grid({})", v.len()),
        }
    }

    /// Orbit points needed beyond the `n` averaged ones.
    fn lookahead(&self) -> u64 {
        match self {
            Observable::IterDerivative { i, j } => u64::from(*i) + u64::from(*j),
            Observable::ReturnDisplacement(r) => r.q() as u64,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantAverage {
    pub value: f64,
    pub n: u64,
    pub observable_tag: String,
    pub x0: f64,
}

fn orbit<M: CircleLift>(fp: &M, x0: f64, len: u64) -> Vec<LiftPoint<f64>> {
    fn run<T: Real, M: CircleLift>(fp: &M, x0: f64, len: u64) -> Vec<LiftPoint<f64>> {
        let mut p = LiftPoint::<T>::from_f64(x0);
        let mut out = Vec::with_capacity(len as usize);
        for _ in 0..len {
            out.push(LiftPoint {
                turns: p.turns,
                frac: p.frac.to_f64(),
            });
            p = p.step(fp);
        }
        out
    }
    if fp.extended_precision() {
        run::<DoubleDouble, M>(fp, x0, len)
    } else {
        run::<f64, M>(fp, x0, len)
    }
}

fn grid_value(values: &[f64], x: f64) -> f64 {
    let m = values.len();
    let s = (x - x.floor()) * m as f64;
    let k = (s.floor() as usize).min(m - 1);
    let w = s - k as f64;
    values[k] * (1.0 - w) + values[(k + 1) % m] * w
}

fn average_on_orbit<M: CircleLift>(fp: &M, pts: &[LiftPoint<f64>], log_d: &[f64], obs: &Observable, n: usize) -> f64 {
    let sum: f64 = match obs {
        Observable::LogDerivative => log_d[..n].iter().sum(),
        Observable::IterDerivative { i, j } => {
            let (i, j) = (*i as usize, *j as usize);
            (0..n)
                .map(|k| log_d[k + j..k + j + i].iter().sum::<f64>().exp())
                .sum()
        }
        Observable::ReturnDisplacement(r) => {
            let q = r.q() as usize;
            (0..n).map(|k| -pts[k + q].displacement(&pts[k], r.p())).sum()
        }
        Observable::Grid(values) => pts[..n].iter().map(|p| grid_value(values, p.frac)).sum(),
    };
    let _ = fp;
    sum / n as f64
}

/// `(1/n) Σ_{k<n} φ(f^k x0)`.
pub fn birkhoff_average<M: CircleLift>(fp: &M, observable: &Observable, x0: f64, n: u64) -> Result<InvariantAverage> {
    Ok(birkhoff_averages(fp, std::slice::from_ref(observable), x0, n)?.remove(0))
}

/// Several averages sharing one orbit.
pub fn birkhoff_averages<M: CircleLift>(
    fp: &M,
    observables: &[Observable],
    x0: f64,
    n: u64,
) -> Result<Vec<InvariantAverage>> {
    if n == 0 {
        return Err(Error::Domain("average needs n >= 1".into()));
    }
    if !x0.is_finite() {
        return Err(Error::Domain(format!("base point {x0} is not finite")));
    }
    if let Some(Observable::Grid(v)) = observables.iter().find(|o| matches!(o, Observable::Grid(v) if v.is_empty())) {
        return Err(Error::Domain(format!("empty grid observable ({} values)", v.len())));
    }
    let len = n + observables.iter().map(Observable::lookahead).max().unwrap_or(0) + 1;
    if len > ITERATE_CAP {
        return Err(Error::CapExceeded {
            requested: len,
            cap: ITERATE_CAP,
        });
    }
    let pts = orbit(fp, x0, len);
    let log_d: Vec<f64> = pts.par_iter().map(|p| fp.derivative(p.frac).ln()).collect();
    Ok(observables
        .par_iter()
        .map(|obs| InvariantAverage {
            value: average_on_orbit(fp, &pts, &log_d, obs, n as usize),
            n,
            observable_tag: obs.tag(),
            x0,
        })
        .collect())
}

/// A piecewise-linear degree-one map `h` with `h(frac(jα)) = f^j(x0)`.
///
/// Knots are sorted by `θ`; `y` is stored in `[x0, x0 + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugacyEstimate {
    pub alpha: f64,
    pub alpha_radius: f64,
    pub x0: f64,
    pub n: usize,
    pub knots: Vec<(f64, f64)>,
    /// `(θ_j, y_j)` in orbit order, `y_j` lifted.
    #[serde(skip)]
    orbit_knots: Vec<(f64, f64)>,
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1);
    let (x0, y0) = (xs[k], ys[k]);
    let (x1, y1) = if k + 1 < xs.len() {
        (xs[k + 1], ys[k + 1])
    } else {
        (xs[0] + 1.0, ys[0] + 1.0)
    };
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl ConjugacyEstimate {
    fn columns(&self) -> (Vec<f64>, Vec<f64>) {
        self.knots.iter().copied().unzip()
    }

    /// `h(θ)` for any real `θ`.
    pub fn h(&self, theta: f64) -> f64 {
        let (xs, ys) = self.columns();
        let k = theta.floor();
        k + interpolate(&xs, &ys, theta - k)
    }

    /// `h^{-1}(y)` for any real `y`.
    pub fn h_inv(&self, y: f64) -> f64 {
        let (xs, ys) = self.columns();
        let k = (y - self.x0).floor();
        k + interpolate(&ys, &xs, y - k)
    }

    /// `∫ h'(θ)^{-1} dθ = Σ Δθ² / Δy`, exact for piecewise-linear `h`.
    pub fn inverse_derivative_integral(&self) -> f64 {
        let m = self.knots.len();
        (0..m)
            .map(|k| {
                let (t0, y0) = self.knots[k];
                let (t1, y1) = if k + 1 < m {
                    self.knots[k + 1]
                } else {
                    (self.knots[0].0 + 1.0, self.knots[0].1 + 1.0)
                };
                let dt = t1 - t0;
                dt * dt / (y1 - y0)
            })
            .sum()
    }

    /// `sup |h(θ + α) - F(h(θ))|` over the knots (`knots`) and over the
    /// midpoints between consecutive knots (`midpoints`).
    pub fn residual<M: CircleLift>(&self, fp: &M) -> ConjugacyResidual {
        let (xs, ys) = self.columns();
        let h = |theta: f64| {
            let k = theta.floor();
            k + interpolate(&xs, &ys, theta - k)
        };
        let defect = |theta: f64| {
            let d = h(theta + self.alpha) - fp.lift(h(theta));
            (d - d.round()).abs()
        };
        let knots = self.orbit_knots.par_iter().map(|&(t, _)| defect(t)).reduce(|| 0.0, f64::max);
        let m = xs.len();
        let midpoints = (0..m)
            .into_par_iter()
            .map(|k| {
                let next = if k + 1 < m { xs[k + 1] } else { xs[0] + 1.0 };
                defect(0.5 * (xs[k] + next))
            })
            .reduce(|| 0.0, f64::max);
        ConjugacyResidual { knots, midpoints }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConjugacyResidual {
    pub knots: f64,
    pub midpoints: f64,
}

/// Denominators used for the rotation number are at least this multiple of `n`.
pub const CONJUGACY_Q_FACTOR: i64 = 16;

/// Match the orbit `f^j(x0)`, `j < n`, with `{jα}` and check the two orders agree.
pub fn conjugacy_from_orbit<M: CircleLift>(fp: &M, x0: f64, n: usize) -> Result<ConjugacyEstimate> {
    if n < 2 {
        return Err(Error::Domain("conjugacy needs at least two knots".into()));
    }
    let base = SolverConfig::for_point(fp);
    let q_cap = base.q_cap.max(CONJUGACY_Q_FACTOR * n as i64);
    let cfg = base.with_q_cap(q_cap);
    let rho = rotation_enclosure(fp, f64::EPSILON, &cfg)?;
    conjugacy_with_rotation(fp, x0, n, &rho)
}

/// As [`conjugacy_from_orbit`] with a known rotation number.
pub fn conjugacy_with_rotation<M: CircleLift>(
    fp: &M,
    x0: f64,
    n: usize,
    rho: &RotationEstimate,
) -> Result<ConjugacyEstimate> {
    let alpha = rho.value - rho.value.floor();
    let pts = orbit(fp, x0, n as u64);
    let start = pts[0];
    let orbit_knots: Vec<(f64, f64)> = pts
        .iter()
        .enumerate()
        .map(|(j, p)| ((j as f64 * alpha).fract(), x0 + p.minus(&start)))
        .collect();
    let mut knots: Vec<(f64, f64)> = orbit_knots
        .iter()
        .map(|&(t, y)| {
            let u = y - x0;
            (t, x0 + (u - u.floor()))
        })
        .collect();
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (index, w) in knots.windows(2).enumerate() {
        if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
            return Err(Error::OrderMismatch { index });
        }
    }
    Ok(ConjugacyEstimate {
        alpha,
        alpha_radius: rho.radius,
        x0,
        n,
        knots,
        orbit_knots,
    })
}

/// `ρ'(t) ≈ ∫ h'^{-1}` from an `n`-knot conjugacy of `f_t`.
pub fn derivative_via_conjugacy(lift: &LiftDescriptor, t: f64, n: usize) -> Result<f64> {
    let fp = FamilyPoint::new(lift.clone(), t);
    Ok(conjugacy_from_orbit(&fp, 0.0, n)?.inverse_derivative_integral())
}

/// `x ↦ h̄(h̄^{-1}(x) + t)`, a rotation in disguise.
#[derive(Clone, Debug)]
pub struct ConjugatedRotation {
    hbar: FamilyPoint,
    pub t: f64,
}

impl ConjugatedRotation {
    pub fn new(hbar: LiftDescriptor, t: f64) -> Self {
        Self {
            hbar: FamilyPoint::new(hbar, 0.0),
            t,
        }
    }

    fn preimage(&self, x: f64) -> f64 {
        invert(&self.hbar, x).expect("inverse of a diffeomorphism lift converges")
    }
}

impl CircleLift for ConjugatedRotation {
    fn lift<T: Real>(&self, x: T) -> T {
        let y0 = self.preimage(x.to_f64());
        let y = T::from_f64(y0);
        let y = y + (x - self.hbar.lift.eval(y)) / T::from_f64(self.hbar.lift.deriv(y0));
        self.hbar.lift.eval(y + T::from_f64(self.t))
    }

    fn derivative(&self, x: f64) -> f64 {
        let y = self.preimage(x);
        self.hbar.lift.deriv(y + self.t) / self.hbar.lift.deriv(y)
    }

    fn displacement_bound(&self) -> f64 {
        self.t.abs() + 2.0 * self.hbar.lift.amplitude()
    }

    fn extended_precision(&self) -> bool {
        self.hbar.lift.uses_double_double()
    }

    fn translation(&self) -> Option<f64> {
        self.hbar.lift.is_rotation().then_some(self.t)
    }
}

/// Paths of maps that are rotations, up to a fixed change of coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum RotationPath {
    /// `g_t = R_t`.
    Rotation,
    /// `g_t = R_{t + a sin 2πt}`.
    Reparametrized { a: f64 },
    /// `g_t = h̄ ∘ R_t ∘ h̄^{-1}`.
    Conjugated { hbar: LiftDescriptor },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrunovskyCheck {
    pub t: f64,
    pub delta: f64,
    /// `(rot g_{t+δ} - rot g_{t-δ}) / 2δ`.
    pub lhs: f64,
    /// `∫ ∂g_t/∂t`, taken in the coordinates where `g_t` is a rotation.
    pub rhs: f64,
    /// `∫ ∂g_t/∂t` in the original coordinates.
    pub literal_rhs: f64,
    pub gap: f64,
}

/// Quadrature nodes for the `∂g_t/∂t` integrals.
pub const BRUNOVSKY_NODES: usize = 4096;

fn rotation_of_path(path: &RotationPath, s: f64, tol: f64) -> Result<RotationEstimate> {
    match path {
        RotationPath::Rotation => rotation_enclosure_default(&FamilyPoint::new(LiftDescriptor::identity(), s), tol),
        RotationPath::Reparametrized { a } => rotation_enclosure_default(
            &FamilyPoint::new(LiftDescriptor::identity(), s + a * (TAU * s).sin()),
            tol,
        ),
        RotationPath::Conjugated { hbar } => rotation_enclosure_default(&ConjugatedRotation::new(hbar.clone(), s), tol),
    }
}

fn rotation_enclosure_default<M: CircleLift>(fp: &M, tol: f64) -> Result<RotationEstimate> {
    rotation_enclosure(fp, tol, &SolverConfig::for_point(fp))
}

fn path_integrals(path: &RotationPath, t: f64) -> Result<(f64, f64)> {
    match path {
        RotationPath::Rotation => Ok((1.0, 1.0)),
        RotationPath::Reparametrized { a } => {
            let v = 1.0 + TAU * a * (TAU * t).cos();
            Ok((v, v))
        }
        RotationPath::Conjugated { hbar } => {
            let h = FamilyPoint::new(hbar.clone(), 0.0);
            let d = |x: f64| hbar.deriv(x);
            let nodes: Vec<f64> = (0..BRUNOVSKY_NODES).map(|i| i as f64 / BRUNOVSKY_NODES as f64).collect();
            let back = nodes
                .par_iter()
                .map(|&x| -> Result<f64> {
                    let z = hbar.eval(x);
                    let w = invert(&h, z)?;
                    let g = hbar.eval(w + t);
                    Ok(d(w + t) / d(invert(&h, g)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let literal = nodes
                .par_iter()
                .map(|&x| Ok(d(invert(&h, x)? + t)))
                .collect::<Result<Vec<_>>>()?;
            let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
            Ok((mean(back), mean(literal)))
        }
    }
}

/// Compare a centred difference of `rot(g_t)` with `∫ ∂g_t/∂t`.
pub fn brunovsky_check(path: &RotationPath, t: f64, delta: f64) -> Result<BrunovskyCheck> {
    if !(t.is_finite() && delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain(format!("need finite t and delta > 0, got t={t}, delta={delta}")));
    }
    let tol = delta * 1e-7;
    let centre = rotation_of_path(path, t, tol)?;
    if let Some(r) = centre.locked {
        return Err(Error::PreconditionFailed(format!("rotation number locked at {r}")));
    }
    let up = rotation_of_path(path, t + delta, tol)?;
    let down = rotation_of_path(path, t - delta, tol)?;
    let lhs = (up.value - down.value) / (2.0 * delta);
    let (rhs, literal_rhs) = path_integrals(path, t)?;
    Ok(BrunovskyCheck {
        t,
        delta,
        lhs,
        rhs,
        literal_rhs,
        gap: (lhs - rhs).abs(),
    })
}
