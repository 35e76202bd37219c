//! Command-line front end.

use std::fs;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::circle_map::{FamilyPoint, LiftDescriptor};
use crate::cont_frac::{closest_returns, continued_fraction, Alpha, Rational};
use crate::denjoy::ConvergentFrame;
use crate::derivative_probe::{quotient_sequence, rational_boundary_probe, Side};
use crate::error::Error;
use crate::measure_conj::conjugacy_from_orbit;
use crate::rotation::{rotation_birkhoff, rotation_enclosure, RotationEstimate, SolverConfig};
use crate::staircase::{inverse_rho, measure_jd, plateau_endpoints, sweep};
use crate::verify::{run_suite, GOLDEN, GOLDEN_PARAMETER_TOL};

#[derive(Parser, Debug)]
#[command(name = "rotascope", version, about = "Rotation numbers and mode locking for families of circle maps")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Decimal digits of working precision (15 to 32; above 16 uses double-double orbits).
    #[arg(long, default_value_t = 15, global = true)]
    precision: u32,
    /// Also write `<NAME>.dat` and a gnuplot script `<NAME>.gp`.
    #[arg(long, value_name = "NAME", global = true)]
    plot: Option<String>,
    /// Seed for randomly sampled checks.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyKind {
    Identity,
    Arnold,
    Custom,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// Family of lifts `F_t = F + t`.
    #[arg(long, value_enum, default_value_t = FamilyKind::Arnold)]
    family: FamilyKind,
    /// Arnold nonlinearity, `|K| < 1`.
    #[arg(long = "K", visible_alias = "k", default_value_t = 0.5)]
    k: f64,
    /// Lift descriptor for `--family custom`: a JSON file path or inline JSON.
    #[arg(long)]
    lift: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Farey,
    Birkhoff,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continued fraction expansion and closest returns.
    Cf {
        /// A real number, an exact ratio `p/q`, or `golden`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, default_value_t = 32)]
        terms: usize,
        /// Also list closest returns with denominator up to this bound.
        #[arg(long)]
        q_max: Option<i64>,
    },
    /// Rotation number of `f_t`.
    Rho {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum, default_value_t = Method::Farey)]
        method: Method,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Orbit length for the Birkhoff estimate.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
    },
    /// Endpoints of the plateau `ρ^{-1}(p/q)`.
    Plateau {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// The parameter `t` with `ρ(t) = α`.
    Inverse {
        #[command(flatten)]
        family: FamilyArgs,
        /// Target rotation number, or `golden`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Measure of the parameters whose rotation number is `q^{-d}`-close to `p/q` but not equal.
    Jd {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Rotation numbers on a uniform parameter grid.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t_hi: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Return partition margins and the refined quotient bound at a convergent.
    Denjoy {
        #[command(flatten)]
        family: FamilyArgs,
        /// Base parameter; defaults to the golden-mean parameter.
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
        /// Index among the closest-return convergents.
        #[arg(long, default_value_t = 4)]
        n_index: usize,
    },
    /// Piecewise-linear conjugacy to the rotation and `∫ h'^{-1}`.
    Conjugacy {
        #[command(flatten)]
        family: FamilyArgs,
        /// Parameter; defaults to the golden-mean parameter.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
    },
    /// Difference quotients of the staircase.
    Probe {
        #[command(subcommand)]
        kind: ProbeKind,
    },
    /// Run the verification suite.
    Verify {
        /// `all`, a check id, or a comma-separated list of ids.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Subcommand, Debug)]
enum ProbeKind {
    /// Quotients towards the plateaus of convergents of `ρ(t0)`.
    Convergents {
        #[command(flatten)]
        family: FamilyArgs,
        /// Base parameter; defaults to the golden-mean parameter.
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 9)]
        n_conv: usize,
    },
    /// Quotients just outside one edge of a plateau.
    Boundary {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long, default_value = "right")]
        side: String,
        /// Comma-separated, strictly decreasing offsets.
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7")]
        deltas: Vec<f64>,
    },
}

/// A failure of the command, split by exit code.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Range(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Plot {
    xlabel: &'static str,
    ylabel: &'static str,
    logscale: bool,
    points: Vec<(f64, f64)>,
}

struct Output {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    plot: Option<Plot>,
    /// False when a checked inequality failed.
    ok: bool,
}

impl Output {
    fn new(json: Value, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        Self {
            json,
            header,
            rows,
            plot: None,
            ok: true,
        }
    }
}

fn lift_of(f: &FamilyArgs, precision: u32) -> Result<LiftDescriptor, Failure> {
    let lift = match f.family {
        FamilyKind::Identity => LiftDescriptor::identity(),
        FamilyKind::Arnold => LiftDescriptor::arnold(f.k)?,
        FamilyKind::Custom => {
            let src = f
                .lift
                .as_deref()
                .ok_or_else(|| Failure::Usage("--family custom needs --lift".into()))?;
            let text = if src.trim_start().starts_with('{') {
                src.to_string()
            } else {
                fs::read_to_string(src).map_err(|e| Failure::Usage(format!("--lift {src}: {e}")))?
            };
            LiftDescriptor::from_json_str(&text)?
        }
    };
    Ok(lift.with_precision(precision)?)
}

fn parse_real(s: &str, flag: &str) -> Result<f64, Failure> {
    if s == "golden" {
        return Ok(GOLDEN);
    }
    s.parse()
        .map_err(|_| Failure::Usage(format!("{flag}: expected a number or `golden`, got {s:?}")))
}

fn rational(p: i64, q: i64) -> Result<Rational, Failure> {
    Ok(Rational::new(p, q)?)
}

fn golden_parameter(lift: &LiftDescriptor, t: Option<f64>) -> Result<f64, Failure> {
    match t {
        Some(t) => Ok(t),
        None => Ok(inverse_rho(lift, GOLDEN, GOLDEN_PARAMETER_TOL)?),
    }
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn estimate_json(e: &RotationEstimate) -> Value {
    json!({
        "value": e.value,
        "radius": e.radius,
        "locked": e.locked.map(|r| r.to_string()),
        "method": format!("{:?}", e.method).to_lowercase(),
        "n_used": e.n_used,
        "bracket": e.bracket.map(|(a, b)| [a.to_string(), b.to_string()]),
    })
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let prec = cli.precision;
    match &cli.command {
        Command::Cf { alpha, terms, q_max } => {
            let a: Alpha = if alpha == "golden" {
                GOLDEN.into()
            } else if alpha.contains('/') {
                alpha.parse::<Rational>()?.into()
            } else {
                parse_real(alpha, "--alpha")?.into()
            };
            let cf = continued_fraction(a, *terms)?;
            let returns = match q_max {
                Some(q) => Some(closest_returns(a.approx(), *q)?),
                None => None,
            };
            let rows = cf
                .a
                .iter()
                .zip(&cf.convergents)
                .enumerate()
                .map(|(k, (a, c))| vec![k.to_string(), a.to_string(), c.p().to_string(), c.q().to_string()])
                .collect();
            let json = json!({
                "a": cf.a,
                "convergents": cf.convergents.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "exact": cf.exact,
                "closest_returns": returns,
            });
            Ok(Output::new(json, vec!["k", "a", "p", "q"], rows))
        }
        Command::Rho {
            family,
            t,
            method,
            tol,
            n,
            x0,
        } => {
            let fp = FamilyPoint::new(lift_of(family, prec)?, *t);
            let e = match method {
                Method::Farey => rotation_enclosure(&fp, *tol, &SolverConfig::for_point(&fp))?,
                Method::Birkhoff => rotation_birkhoff(&fp, *x0, *n)?,
            };
            let row = vec![
                e.value.to_string(),
                e.radius.to_string(),
                opt_str(e.locked.map(|r| r.p())),
                opt_str(e.locked.map(|r| r.q())),
            ];
            Ok(Output::new(
                estimate_json(&e),
                vec!["rho", "radius", "locked_p", "locked_q"],
                vec![row],
            ))
        }
        Command::Plateau { family, p, q, tol } => {
            let pl = plateau_endpoints(&lift_of(family, prec)?, rational(*p, *q)?, *tol)?;
            let json = json!({
                "pq": pl.pq.to_string(),
                "t_left": pl.t_left,
                "t_right": pl.t_right,
                "width": pl.width(),
                "tol": pl.tol,
                "midpoint_locked": pl.midpoint_locked,
            });
            let row = vec![pl.pq.p().to_string(), pl.pq.q().to_string(), pl.t_left.to_string(), pl.t_right.to_string(), pl.width().to_string()];
            Ok(Output::new(json, vec!["p", "q", "t_left", "t_right", "width"], vec![row]))
        }
        Command::Inverse { family, alpha, tol } => {
            let a = parse_real(alpha, "--alpha")?;
            let t = inverse_rho(&lift_of(family, prec)?, a, *tol)?;
            Ok(Output::new(
                json!({"alpha": a, "t": t, "tol": tol}),
                vec!["alpha", "t"],
                vec![vec![a.to_string(), t.to_string()]],
            ))
        }
        Command::Jd { family, p, q, d, tol } => {
            let m = measure_jd(&lift_of(family, prec)?, rational(*p, *q)?, *d, *tol)?;
            let row = vec![m.pq.p().to_string(), m.pq.q().to_string(), m.d.to_string(), m.measure.to_string(), m.bound.to_string(), m.holds.to_string()];
            let mut out = Output::new(
                json!({
                    "pq": m.pq.to_string(),
                    "d": m.d,
                    "measure": m.measure,
                    "bound": m.bound,
                    "M": m.m,
                    "t_minus": m.t_minus,
                    "t_plus": m.t_plus,
                    "plateau": [m.plateau.t_left, m.plateau.t_right],
                    "outer_estimate": m.outer_estimate,
                    "holds": m.holds,
                }),
                vec!["p", "q", "d", "measure", "bound", "holds"],
                vec![row],
            );
            out.ok = m.holds;
            Ok(out)
        }
        Command::Sweep {
            family,
            t_lo,
            t_hi,
            samples,
            tol,
        } => {
            let s = sweep(&lift_of(family, prec)?, *t_lo, *t_hi, *samples, *tol)?;
            let rows = s
                .points
                .iter()
                .map(|(t, e)| {
                    vec![
                        t.to_string(),
                        e.value.to_string(),
                        e.radius.to_string(),
                        opt_str(e.locked.map(|r| r.p())),
                        opt_str(e.locked.map(|r| r.q())),
                    ]
                })
                .collect();
            let violations = s.monotonicity_violations();
            let json = json!({
                "points": s.points.iter().map(|(t, e)| json!({"t": t, "rho": e.value, "radius": e.radius, "locked": e.locked.map(|r| r.to_string())})).collect::<Vec<_>>(),
                "locked": s.locked_count(),
                "monotonicity_violations": violations,
            });
            let mut out = Output::new(json, vec!["t", "rho", "radius", "locked_p", "locked_q"], rows);
            out.ok = violations.is_empty();
            out.plot = Some(Plot {
                xlabel: "t",
                ylabel: "rho(t)",
                logscale: false,
                points: s.points.iter().map(|(t, e)| (*t, e.value)).collect(),
            });
            Ok(out)
        }
        Command::Denjoy { family, t0, x, n_index } => {
            let lift = lift_of(family, prec)?;
            let t0 = golden_parameter(&lift, *t0)?;
            let frame = ConvergentFrame::new(&lift, t0, *n_index)?;
            let x = frame.to_frame(*x);
            let part = frame.partition(x)?;
            let check = frame.hat_ell_check(x)?;
            let m = &part.margins;
            let row = vec![
                frame.q().to_string(),
                m.e10.to_string(),
                m.e100.to_string(),
                m.e101.to_string(),
                check.hat_ell.to_string(),
                check.quotient.to_string(),
                check.bound.to_string(),
                check.holds.to_string(),
            ];
            let mut out = Output::new(
                json!({"t0": t0, "conv": frame.conv.to_string(), "reflected": frame.reflected, "margins": m, "check": check}),
                vec!["q", "e10", "e100", "e101", "hat_ell", "quotient", "bound", "holds"],
                vec![row],
            );
            out.ok = check.holds && m.min() > 0.0;
            Ok(out)
        }
        Command::Conjugacy { family, t, n, x0 } => {
            let lift = lift_of(family, prec)?;
            let t = golden_parameter(&lift, *t)?;
            let fp = FamilyPoint::new(lift, t);
            let h = conjugacy_from_orbit(&fp, *x0, *n)?;
            let integral = h.inverse_derivative_integral();
            let residual = h.residual(&fp);
            let rows = h.knots.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect();
            let mut out = Output::new(
                json!({
                    "t": t,
                    "alpha": h.alpha,
                    "alpha_radius": h.alpha_radius,
                    "n": h.n,
                    "inverse_derivative_integral": integral,
                    "residual": residual,
                }),
                vec!["theta", "y"],
                rows,
            );
            out.ok = integral >= 1.0 - 1e-3;
            out.plot = Some(Plot {
                xlabel: "theta",
                ylabel: "h(theta)",
                logscale: false,
                points: h.knots.clone(),
            });
            Ok(out)
        }
        Command::Probe { kind } => match kind {
            ProbeKind::Convergents { family, t0, n_conv } => {
                let lift = lift_of(family, prec)?;
                let t0 = golden_parameter(&lift, *t0)?;
                let s = quotient_sequence(&lift, t0, *n_conv)?;
                let rows = s
                    .records
                    .iter()
                    .map(|r| {
                        vec![
                            r.k.to_string(),
                            r.convergent.p().to_string(),
                            r.convergent.q().to_string(),
                            r.t_prime.to_string(),
                            r.quotient.to_string(),
                            r.uncertainty.to_string(),
                            r.bound_em.to_string(),
                            opt_str(r.bound_e55),
                        ]
                    })
                    .collect();
                let ok = s.records.iter().all(|r| r.satisfies_em() && r.satisfies_e55() != Some(false));
                let plot = Plot {
                    xlabel: "q",
                    ylabel: "quotient",
                    logscale: false,
                    points: s.records.iter().map(|r| (r.convergent.q() as f64, r.quotient)).collect(),
                };
                let mut out = Output::new(
                    serde_json::to_value(&s).expect("plain data serializes"),
                    vec!["k", "p", "q", "t_prime", "quotient", "uncertainty", "bound_eM", "bound_e55"],
                    rows,
                );
                out.ok = ok;
                out.plot = Some(plot);
                Ok(out)
            }
            ProbeKind::Boundary {
                family,
                p,
                q,
                side,
                deltas,
            } => {
                let side: Side = side.parse()?;
                let b = rational_boundary_probe(&lift_of(family, prec)?, rational(*p, *q)?, side, deltas)?;
                let points: Vec<(f64, f64)> = b.offsets.iter().copied().zip(b.quotients.iter().copied()).collect();
                let rows = points.iter().map(|(d, q)| vec![d.to_string(), q.to_string()]).collect();
                let mut out = Output::new(
                    serde_json::to_value(&b).expect("plain data serializes"),
                    vec!["delta", "quotient"],
                    rows,
                );
                out.plot = Some(Plot {
                    xlabel: "delta",
                    ylabel: "quotient",
                    logscale: true,
                    points,
                });
                Ok(out)
            }
        },
        Command::Verify { suite } => {
            let r = run_suite(suite, cli.seed)?;
            let rows = r
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.id.clone(),
                        c.reference.clone(),
                        serde_json::to_value(c.status).expect("enum serializes").as_str().unwrap_or("").to_string(),
                        c.observed.to_string(),
                        c.bound.to_string(),
                        c.tol.to_string(),
                        c.seconds.to_string(),
                    ]
                })
                .collect();
            let mut out = Output::new(
                serde_json::to_value(&r).expect("plain data serializes"),
                vec!["id", "ref", "status", "observed", "bound", "tol", "seconds"],
                rows,
            );
            out.ok = r.all_pass();
            Ok(out)
        }
    }
}

fn write_plot(name: &str, plot: &Plot) -> std::io::Result<()> {
    let mut dat = String::new();
    for (x, y) in &plot.points {
        dat.push_str(&format!("{x:.17e} {y:.17e}\n"));
    }
    fs::write(format!("{name}.dat"), dat)?;
    let base = std::path::Path::new(name)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    let mut gp = format!("set xlabel \"{}\"\nset ylabel \"{}\"\n", plot.xlabel, plot.ylabel);
    if plot.logscale {
        gp.push_str("set logscale xy\n");
    }
    gp.push_str(&format!("plot \"{base}.dat\" using 1:2 with linespoints notitle\n"));
    fs::write(format!("{name}.gp"), gp)
}

fn emit(out: &Output, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            writeln!(w, "{}", serde_json::to_string_pretty(&out.json).map_err(std::io::Error::other)?)
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(&out.header)?;
            for r in &out.rows {
                csv.write_record(r)?;
            }
            csv.flush()
        }
    }
}

/// Run with explicit output streams; returns the process exit code.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let output = match execute(&cli) {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return 1;
        }
    };
    if let Some(name) = &cli.plot {
        match &output.plot {
            Some(p) => {
                if let Err(e) = write_plot(name, p) {
                    let _ = writeln!(err, "error: --plot {name}: {e}");
                    return 1;
                }
            }
            None => {
                let _ = writeln!(err, "error: --plot is not available for this subcommand");
                return 2;
            }
        }
    }
    if let Err(e) = emit(&output, cli.format, out) {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    if output.ok {
        0
    } else {
        1
    }
}

/// Run with the process's stdout and stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
