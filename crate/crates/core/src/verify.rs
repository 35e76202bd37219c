//! A self-contained verification suite with a machine-readable report.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::{distortion_constants, FamilyPoint, LiftDescriptor};
use crate::cont_frac::{closest_returns, closest_returns_from, continued_fraction, Rational};
use crate::denjoy::{distortion_ratio, ConvergentFrame};
use crate::derivative_probe::{quotient_sequence, rational_boundary_probe, Side};
use crate::error::{Error, Result};
use crate::measure_conj::{birkhoff_averages, brunovsky_check, derivative_via_conjugacy, Observable, RotationPath};
use crate::rotation::{rotation_birkhoff, rotation_enclosure, SolverConfig};
use crate::staircase::{inverse_rho, measure_jd, plateau_endpoints, sweep};

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Tolerance for locating the golden-mean parameter.
pub const GOLDEN_PARAMETER_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    #[serde(rename = "ref")]
    pub reference: String,
    pub status: Status,
    pub observed: f64,
    pub bound: f64,
    pub tol: f64,
    pub seconds: f64,
    /// Human-readable summary, not part of the JSON report.
    #[serde(skip)]
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!(
            "{status} {:<24} observed={:.6e} bound={:.6e} tol={:.1e} {:.2}s  {}",
            self.id, self.observed, self.bound, self.tol, self.seconds, self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

struct Outcome {
    pass: bool,
    observed: f64,
    bound: f64,
    tol: f64,
    detail: String,
}

struct CheckSpec {
    id: &'static str,
    reference: &'static str,
    limit_seconds: f64,
    run: fn(&Context) -> Result<Outcome>,
}

const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        id: "convergent-quotients",
        reference: "quotient >= exp(-M) towards convergent plateaus",
        limit_seconds: 120.0,
        run: convergent_quotients,
    },
    CheckSpec {
        id: "refined-quotients",
        reference: "quotient >= exp(-M hat_ell) with hat_ell < 1",
        limit_seconds: 300.0,
        run: refined_quotients,
    },
    CheckSpec {
        id: "jd-measure",
        reference: "m(J_d(p/q)) <= 2 exp(M) q^-d",
        limit_seconds: 300.0,
        run: jd_measure,
    },
    CheckSpec {
        id: "invariant-averages",
        reference: "mu(log f') = 0, mu((f^i)' o f^j) >= 1",
        limit_seconds: 60.0,
        run: invariant_averages,
    },
    CheckSpec {
        id: "conjugacy-derivative",
        reference: "rho'(t) = int 1/h' >= 1",
        limit_seconds: 120.0,
        run: conjugacy_derivative,
    },
    CheckSpec {
        id: "brunovsky",
        reference: "d rot(g_t)/dt = int dg_t/dt",
        limit_seconds: 30.0,
        run: brunovsky,
    },
    CheckSpec {
        id: "boundary-blowup",
        reference: "quotients grow at a plateau edge",
        limit_seconds: 180.0,
        run: boundary_blowup,
    },
    CheckSpec {
        id: "return-combinatorics",
        reference: "disjointness, containment and distortion margins",
        limit_seconds: 120.0,
        run: return_combinatorics,
    },
    CheckSpec {
        id: "oracle-equivalence",
        reference: "independent estimators agree",
        limit_seconds: 180.0,
        run: oracle_equivalence,
    },
    CheckSpec {
        id: "staircase-monotone",
        reference: "t -> rho(t) nondecreasing",
        limit_seconds: 180.0,
        run: staircase_monotone,
    },
];

pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

struct Context {
    seed: u64,
    golden_parameter: OnceLock<std::result::Result<f64, String>>,
}

impl Context {
    fn arnold(k: f64) -> LiftDescriptor {
        LiftDescriptor::arnold(k).expect("|K| < 1 gives a diffeomorphism")
    }

    /// `t0` with `ρ(f_{t0}) = golden mean` for Arnold `K = 0.5`.
    fn t0(&self) -> Result<f64> {
        self.golden_parameter
            .get_or_init(|| inverse_rho(&Self::arnold(0.5), GOLDEN, GOLDEN_PARAMETER_TOL).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Domain)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Run `suite` (`all`, one check id, or a comma-separated list of ids).
pub fn run_suite(suite: &str, seed: u64) -> Result<VerifyReport> {
    let wanted: Vec<&CheckSpec> = if suite == "all" {
        CHECKS.iter().collect()
    } else {
        suite
            .split(',')
            .map(|id| {
                CHECKS
                    .iter()
                    .find(|c| c.id == id.trim())
                    .ok_or_else(|| Error::Domain(format!("unknown check {id:?}; known: {}", check_ids().join(", "))))
            })
            .collect::<Result<_>>()?
    };
    let ctx = Context {
        seed,
        golden_parameter: OnceLock::new(),
    };
    let checks = wanted
        .into_iter()
        .map(|spec| {
            let start = Instant::now();
            let outcome = (spec.run)(&ctx);
            let seconds = start.elapsed().as_secs_f64();
            let (status, observed, bound, tol, detail) = match outcome {
                Ok(o) => {
                    let in_time = seconds <= spec.limit_seconds;
                    let status = if o.pass && in_time { Status::Pass } else { Status::Fail };
                    let detail = if in_time {
                        o.detail
                    } else {
                        format!("{} (over the {}s limit)", o.detail, spec.limit_seconds)
                    };
                    (status, o.observed, o.bound, o.tol, detail)
                }
                Err(e) => (Status::Fail, f64::NAN, f64::NAN, f64::NAN, format!("error: {e}")),
            };
            CheckResult {
                id: spec.id.to_string(),
                reference: spec.reference.to_string(),
                status,
                observed,
                bound,
                tol,
                seconds,
                detail,
            }
        })
        .collect();
    Ok(VerifyReport { checks })
}

/// Largest convergent denominator used by the quotient checks.
const QUOTIENT_Q_MAX: i64 = 21;

fn convergent_quotients(ctx: &Context) -> Result<Outcome> {
    let seq = quotient_sequence(&Context::arnold(0.5), ctx.t0()?, 10)?;
    let recs: Vec<_> = seq.records.iter().filter(|r| r.convergent.q() <= QUOTIENT_Q_MAX).collect();
    let violations = recs.iter().filter(|r| !r.satisfies_em()).count();
    let observed = recs.iter().map(|r| r.quotient + r.uncertainty).fold(f64::INFINITY, f64::min);
    let bound = (-seq.m).exp();
    Ok(Outcome {
        pass: violations == 0 && !recs.is_empty() && seq.skipped.iter().all(|s| s.convergent.q() > QUOTIENT_Q_MAX),
        observed,
        bound,
        tol: 0.0,
        detail: format!(
            "{} convergents, {violations} violations, running max {:.6}",
            recs.len(),
            seq.limsup_diagnostic
        ),
    })
}

fn refined_quotients(ctx: &Context) -> Result<Outcome> {
    let seq = quotient_sequence(&Context::arnold(0.5), ctx.t0()?, 10)?;
    let certified: Vec<_> = seq
        .records
        .iter()
        .filter(|r| r.convergent.q() <= QUOTIENT_Q_MAX && r.bound_e55.is_some())
        .collect();
    let violations = certified.iter().filter(|r| r.satisfies_e55() == Some(false)).count();
    let observed = certified
        .iter()
        .map(|r| r.quotient + r.uncertainty - r.bound_e55.unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    let max_bound = certified.iter().filter_map(|r| r.bound_e55).fold(0.0, f64::max);
    Ok(Outcome {
        pass: violations == 0 && !certified.is_empty(),
        observed,
        bound: 0.0,
        tol: 0.0,
        detail: format!(
            "{} certified convergents, {violations} violations, largest refined bound {max_bound:.6}",
            certified.len()
        ),
    })
}

/// Inverse-rotation tolerance for the J_d measurements.
const JD_TOL: f64 = 1e-7;

fn jd_measure(_: &Context) -> Result<Outcome> {
    let mut cases = Vec::new();
    for k in [0.5, 0.9] {
        for (q, d) in [(2, 3.5), (3, 3.5), (5, 3.5), (5, 4.0)] {
            for p in 1..q {
                if let Ok(r) = Rational::new(p, q) {
                    if r.q() == q {
                        cases.push((k, r, d));
                    }
                }
            }
        }
    }
    let results = cases
        .par_iter()
        .map(|&(k, r, d)| measure_jd(&Context::arnold(k), r, d, JD_TOL))
        .collect::<Result<Vec<_>>>()?;
    let violations = results.iter().filter(|m| !m.holds).count();
    let outer = results.iter().filter(|m| m.outer_estimate).count();
    let worst = results.iter().map(|m| m.measure / m.bound).fold(0.0, f64::max);

    let id = LiftDescriptor::identity();
    let mut identity_error: f64 = 0.0;
    for (q, d) in [(2, 3.5), (3, 3.5), (5, 3.5), (5, 4.0)] {
        let m = measure_jd(&id, Rational::new(1, q)?, d, 1e-14)?;
        identity_error = identity_error.max((m.measure - 2.0 * (q as f64).powf(-d)).abs());
    }
    Ok(Outcome {
        pass: violations == 0 && identity_error <= 1e-10,
        observed: worst,
        bound: 1.0,
        tol: 2.0 * JD_TOL,
        detail: format!(
            "{} cases ({outer} bounded from outside), {violations} violations, largest measure/bound {worst:.3e}, identity error {identity_error:.1e}",
            results.len()
        ),
    })
}

fn invariant_averages(ctx: &Context) -> Result<Outcome> {
    let fp = FamilyPoint::new(Context::arnold(0.5), ctx.t0()?);
    let mut obs = vec![Observable::LogDerivative];
    for i in 1..=5 {
        for j in 0..=5 {
            obs.push(Observable::IterDerivative { i, j });
        }
    }
    let avg = birkhoff_averages(&fp, &obs, 0.0, 200_000)?;
    let log_mean = avg[0].value.abs();
    let min_iter = avg[1..].iter().map(|a| a.value).fold(f64::INFINITY, f64::min);
    let observed = log_mean.max(1.0 - min_iter);
    Ok(Outcome {
        pass: observed <= 1e-3,
        observed,
        bound: 1e-3,
        tol: 0.0,
        detail: format!("|mean log f'| = {log_mean:.3e}, smallest derivative mean {min_iter:.6}"),
    })
}

fn conjugacy_derivative(ctx: &Context) -> Result<Outcome> {
    let lift = Context::arnold(0.5);
    let t0 = ctx.t0()?;
    let value = derivative_via_conjugacy(&lift, t0, 8192)?;
    let delta = 1e-5;
    let rho = |t: f64| {
        let fp = FamilyPoint::new(lift.clone(), t);
        rotation_enclosure(&fp, 1e-14, &SolverConfig::for_point(&fp))
    };
    let (up, down) = rayon::join(|| rho(t0 + delta), || rho(t0 - delta));
    let (up, down) = (up?, down?);
    let fd = (up.value - down.value) / (2.0 * delta);
    let fd_err = (up.radius + down.radius) / (2.0 * delta);
    let rel = (value - fd).abs() / fd;
    Ok(Outcome {
        pass: rel <= 0.1 && value >= 1.0 - 1e-3,
        observed: rel,
        bound: 0.1,
        tol: 1e-3,
        detail: format!("integral {value:.6}, difference quotient {fd:.6} ± {fd_err:.1e}"),
    })
}

fn brunovsky(_: &Context) -> Result<Outcome> {
    let a = brunovsky_check(&RotationPath::Rotation, GOLDEN, 1e-4)?;
    let b = brunovsky_check(&RotationPath::Reparametrized { a: 0.01 }, 0.3, 1e-5)?;
    let observed = a.gap.max(b.gap);
    Ok(Outcome {
        pass: observed <= 1e-3,
        observed,
        bound: 1e-3,
        tol: 0.0,
        detail: format!(
            "R_t: {:.6} vs {:.6}; reparametrized: {:.6} vs {:.6}",
            a.lhs, a.rhs, b.lhs, b.rhs
        ),
    })
}

fn boundary_blowup(_: &Context) -> Result<Outcome> {
    let deltas: Vec<f64> = (2..=7).map(|k| 10f64.powi(-k)).collect();
    let zero = Rational::integer(0);
    let probe = rational_boundary_probe(&Context::arnold(0.5), zero, Side::Right, &deltas)?;
    let contrast = rational_boundary_probe(&LiftDescriptor::identity(), zero, Side::Right, &deltas)?;
    let ratio = probe.quotients[probe.quotients.len() - 1] / probe.quotients[0];
    let contrast_err = contrast.quotients.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        pass: probe.strictly_increasing() && ratio >= 10.0 && contrast_err <= 1e-9,
        observed: ratio,
        bound: 10.0,
        tol: 0.0,
        detail: format!(
            "increasing: {}, log-log slope {:.4}, identity deviation {contrast_err:.1e}",
            probe.strictly_increasing(),
            probe.loglog_slope
        ),
    })
}

/// Closest-return indices of `q = 8` and `q = 21` for the golden mean.
const COMBINATORICS_DEPTHS: [usize; 2] = [4, 6];
const COMBINATORICS_POINTS: usize = 20;

fn return_combinatorics(ctx: &Context) -> Result<Outcome> {
    let lift = Context::arnold(0.5);
    let t0 = ctx.t0()?;
    let mut rng = ctx.rng(8);
    let xs: Vec<f64> = (0..COMBINATORICS_POINTS).map(|_| rng.gen::<f64>()).collect();
    let m = distortion_constants(&lift)?.m;
    let mut worst_margin = f64::INFINITY;
    let mut worst_abut: f64 = 0.0;
    let mut distortion_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for n in COMBINATORICS_DEPTHS {
        let frame = ConvergentFrame::new(&lift, t0, n)?;
        let parts = xs
            .par_iter()
            .map(|&x| -> Result<_> {
                let part = frame.partition(frame.to_frame(x))?;
                let ratio = distortion_ratio(&frame.base, &part.l, frame.q(), m)?;
                Ok((part.margins, ratio))
            })
            .collect::<Result<Vec<_>>>()?;
        for (margins, ratio) in parts {
            worst_margin = worst_margin.min(margins.min());
            worst_abut = worst_abut.max(margins.abutting_error);
            distortion_ok &= ratio.holds;
            worst_ratio = worst_ratio.max(ratio.max_ratio.ln() / ratio.bound.ln().max(f64::MIN_POSITIVE));
        }
    }
    Ok(Outcome {
        pass: worst_margin > 1e-12 && worst_abut <= 1e-12 && distortion_ok,
        observed: worst_margin,
        bound: 1e-12,
        tol: 0.0,
        detail: format!(
            "abutting error {worst_abut:.1e}, distortion within bound: {distortion_ok}, largest log-ratio share {worst_ratio:.3}"
        ),
    })
}

fn oracle_equivalence(ctx: &Context) -> Result<Outcome> {
    let mut rng = ctx.rng(9);
    let points: Vec<(f64, f64)> = (0..100).map(|_| (rng.gen_range(0.0..0.95), rng.gen::<f64>())).collect();
    let n_birkhoff = 100_000;
    let rotation_failures = points
        .par_iter()
        .map(|&(k, t)| -> Result<usize> {
            let fp = FamilyPoint::new(Context::arnold(k), t);
            let farey = rotation_enclosure(&fp, 1e-12, &SolverConfig::for_point(&fp))?;
            let b = rotation_birkhoff(&fp, 0.0, n_birkhoff)?;
            let slack = 1.0 / n_birkhoff as f64;
            Ok(usize::from(!(farey.upper() >= b.value - slack && farey.lower() <= b.value + slack)))
        })
        .sum::<Result<usize>>()?;

    let alphas: Vec<f64> = (0..100).map(|_| rng.gen::<f64>()).collect();
    let q_max = 10_000;
    let cr_failures = alphas
        .iter()
        .map(|&a| -> Result<usize> {
            let brute = closest_returns(a, q_max)?;
            let cf = continued_fraction(a, 64)?;
            Ok(usize::from(brute != closest_returns_from(&cf, a, q_max)))
        })
        .sum::<Result<usize>>()?;

    let mut plateau_err: f64 = 0.0;
    for k in [0.3, 0.5, 0.9] {
        let pl = plateau_endpoints(&Context::arnold(k), Rational::integer(0), 1e-12)?;
        let expect = k / std::f64::consts::TAU;
        plateau_err = plateau_err.max((pl.t_right - expect).abs()).max((pl.t_left + expect).abs());
    }
    let failures = rotation_failures + cr_failures;
    Ok(Outcome {
        pass: failures == 0 && plateau_err <= 1e-9,
        observed: failures as f64,
        bound: 0.0,
        tol: 1e-9,
        detail: format!(
            "rotation disagreements {rotation_failures}, closest-return disagreements {cr_failures}, plateau error {plateau_err:.1e}"
        ),
    })
}

fn staircase_monotone(_: &Context) -> Result<Outcome> {
    let s = sweep(&Context::arnold(0.9), 0.0, 1.0, 500, 1e-10)?;
    let v = s.monotonicity_violations().len();
    Ok(Outcome {
        pass: v == 0,
        observed: v as f64,
        bound: 0.0,
        tol: 0.0,
        detail: format!("{} samples, {} locked", s.points.len(), s.locked_count()),
    })
}
