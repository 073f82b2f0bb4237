//! Command-line front end.
//!
//! Every subcommand calls one library operation and writes its report as
//! JSON or CSV to stdout or `--out`. Exit codes: 0 success, 1 usage or I/O
//! error, 2 when `verify` finds a violation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{self, BoundId, EnvelopeMode};
use crate::conjecture::{self, BoolFunc2, ViolationReport};
use crate::info::JointDist;
use crate::reduction::{self, TripleDist};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "bssc",
    version,
    about = "Sum-rate bounds and an auxiliary-variable inequality for the binary skew-symmetric broadcast channel"
)]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (default: csv for envelope and diffcurve, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomly generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-user capacity of either receiver.
    Capacity,
    /// Check LHS <= RHS on the simplex grid for one or all functions X = f(U, V).
    Verify {
        /// Truth table f(00)f(01)f(10)f(11), an alias, or "all".
        #[arg(long, default_value = "all")]
        function: String,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = conjecture::DEFAULT_TOL)]
        tol: f64,
    },
    /// Maximize the left-hand side for one function.
    Maximize {
        #[arg(long)]
        function: String,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 20)]
        refine: usize,
    },
    /// Sum rate of one bound with its achiever.
    Sumrate {
        #[arg(long)]
        bound: String,
    },
    /// Lower convex envelope of the difference curve.
    Envelope {
        #[arg(long, default_value_t = bounds::DEFAULT_ENVELOPE_SAMPLES)]
        samples: usize,
        #[arg(long, default_value = "analytic")]
        mode: String,
    },
    /// Samples of the difference curve I(X;Y1) - I(X;Y2).
    Diffcurve {
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Cardinality reduction of the auxiliaries with certificates.
    Reduce {
        /// JSON table over (u, v, x) or (w, x); a seeded random instance if absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Interval construction making X a function of the auxiliaries and W.
    Hajek {
        /// JSON table over (u, v, x) or (w, x); a seeded random instance if absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Plot-ready rate-region points of one bound or all.
    Points {
        #[arg(long)]
        bound: String,
    },
}

#[derive(Debug, Serialize)]
struct CapacityOut {
    capacity: f64,
    input: crate::info::ProbVec,
}

#[derive(Debug, Serialize)]
struct MaximizeOut {
    function: BoolFunc2,
    class: conjecture::FunctionClass,
    value: f64,
    argmax: conjecture::JointUV,
}

#[derive(Debug, Serialize)]
struct DiffCurveOut {
    x: Vec<f64>,
    delta: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ReduceOut {
    input: TripleDist,
    reduced: TripleDist,
    certificates: Vec<reduction::ReductionStep>,
}

#[derive(Debug, Serialize)]
struct HajekOut {
    #[serde(flatten)]
    result: reduction::FunctionalizationResult,
    max_recomposition_error: f64,
}

#[derive(Debug, Serialize)]
struct PointsOut {
    bound_id: BoundId,
    points: Vec<(f64, f64)>,
}

struct Report {
    body: String,
    code: i32,
}

impl Report {
    fn ok(body: String) -> Self {
        Report {
            body,
            code: EXIT_OK,
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn parse_function(s: &str) -> Result<BoolFunc2, String> {
    s.parse::<BoolFunc2>().map_err(err)
}

fn parse_bounds(s: &str) -> Result<Vec<BoundId>, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(BoundId::ALL.to_vec())
    } else {
        Ok(vec![s.parse::<BoundId>().map_err(err)?])
    }
}

fn load_triple(path: &PathBuf) -> Result<TripleDist, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: JointDist =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    TripleDist::new(table).map_err(err)
}

/// Objective recorded in reduction certificates: the inequality's left-hand
/// side for `(u, v, x)` tables and the Marton functional for `(w, x)`.
pub fn reduction_objective(p: &TripleDist) -> Result<f64, String> {
    if p.x_size() != 2 {
        return Err(format!(
            "objective needs a binary X, got |X| = {}",
            p.x_size()
        ));
    }
    match p.rank() {
        3 => conjecture::lhs_general(p.table()).map_err(err),
        _ => {
            let ach = bounds::Achiever::from_joint(p.table(), "w").map_err(err)?;
            bounds::marton_objective(&ach).map_err(err)
        }
    }
}

fn verify_csv(reports: &[ViolationReport]) -> String {
    let mut out = String::from("function,class,step,points,max_gap,violated\n");
    for r in reports {
        let class = serde_json::to_value(r.class)
            .ok()
            .and_then(|v| v.as_str().map(String::from));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.func.code(),
            class.unwrap_or_default(),
            r.step,
            r.points_checked,
            r.max_gap,
            r.violated
        );
    }
    out
}

fn execute(cli: &Cli) -> Result<Report, String> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Capacity => {
            let (c, input) = bounds::capacity().map_err(err)?;
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Json => json(&CapacityOut { capacity: c, input })?,
                Format::Csv => format!("capacity,p0\n{},{}\n", c, input[0]),
            }))
        }
        Command::Verify {
            function,
            step,
            tol,
        } => {
            let reports = if function.eq_ignore_ascii_case("all") {
                conjecture::verify_all(*step, *tol).map_err(err)?
            } else {
                vec![conjecture::verify_grid(parse_function(function)?, *step, *tol).map_err(err)?]
            };
            let body = match fmt(Format::Json) {
                Format::Json if reports.len() == 1 => json(&reports[0])?,
                Format::Json => json(&reports)?,
                Format::Csv => verify_csv(&reports),
            };
            let code = if reports.iter().any(|r| r.violated) {
                EXIT_VIOLATION
            } else {
                EXIT_OK
            };
            Ok(Report { body, code })
        }
        Command::Maximize {
            function,
            step,
            refine,
        } => {
            let f = parse_function(function)?;
            let (value, argmax) = conjecture::maximize_lhs(f, *step, *refine).map_err(err)?;
            let out = MaximizeOut {
                function: f,
                class: f.class(),
                value,
                argmax,
            };
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Json => json(&out)?,
                Format::Csv => {
                    let [a, b, c, d] = argmax.probs();
                    format!(
                        "function,value,p00,p01,p10,p11\n{},{value},{a},{b},{c},{d}\n",
                        f.code()
                    )
                }
            }))
        }
        Command::Sumrate { bound } => {
            let id: BoundId = bound.parse().map_err(err)?;
            let report = bounds::sum_rate(id).map_err(err)?;
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Json => json(&report)?,
                Format::Csv => bounds::rate_points_csv(&[(id, vec![report.rate_point])]),
            }))
        }
        Command::Envelope { samples, mode } => {
            let mode: EnvelopeMode = mode.parse().map_err(err)?;
            let env = bounds::lower_convex_envelope(*samples, mode).map_err(err)?;
            Ok(Report::ok(match fmt(Format::Csv) {
                Format::Json => json(&env)?,
                Format::Csv => bounds::envelope_csv(&env, *samples),
            }))
        }
        Command::Diffcurve { samples } => Ok(Report::ok(match fmt(Format::Csv) {
            Format::Csv => bounds::difference_csv(*samples),
            Format::Json => {
                let n = (*samples).max(2);
                let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                let delta = x
                    .iter()
                    .map(|&x| bounds::difference_curve(x))
                    .collect::<Result<_, _>>()
                    .map_err(err)?;
                json(&DiffCurveOut { x, delta })?
            }
        })),
        Command::Reduce { input } => {
            let p = match input {
                Some(path) => load_triple(path)?,
                None => TripleDist::random_deterministic(
                    &mut ChaCha8Rng::seed_from_u64(cli.seed),
                    3,
                    2,
                    2,
                ),
            };
            reduction_objective(&p)?;
            let r = reduction::reduce_support(&p, |t| reduction_objective(t).unwrap_or(f64::NAN))
                .map_err(err)?;
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Json => json(&ReduceOut {
                    input: p,
                    reduced: r.reduced,
                    certificates: r.steps,
                })?,
                Format::Csv => {
                    let mut out = String::from("axis,eps,obj_before,obj_after,L\n");
                    for s in &r.steps {
                        let l: Vec<String> = s.l.iter().map(f64::to_string).collect();
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{}",
                            s.axis,
                            s.eps,
                            s.obj_before,
                            s.obj_after,
                            l.join(";")
                        );
                    }
                    out
                }
            }))
        }
        Command::Hajek { input } => {
            let p = match input {
                Some(path) => load_triple(path)?,
                None => TripleDist::random(&mut ChaCha8Rng::seed_from_u64(cli.seed), 2, 2, 2),
            };
            let result = reduction::hajek_construct(&p);
            let max_recomposition_error = result.max_recomposition_error(&p);
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Json => json(&HajekOut {
                    result,
                    max_recomposition_error,
                })?,
                Format::Csv => {
                    let mut out = String::from("w,lo,hi,p\n");
                    for (w, (lo, hi)) in result.intervals.iter().enumerate() {
                        let _ = writeln!(out, "{w},{lo},{hi},{}", result.w_dist[w]);
                    }
                    out
                }
            }))
        }
        Command::Points { bound } => {
            let ids = parse_bounds(bound)?;
            let rows = ids
                .into_iter()
                .map(|id| bounds::rate_points(id).map(|pts| (id, pts)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            Ok(Report::ok(match fmt(Format::Json) {
                Format::Csv => bounds::rate_points_csv(&rows),
                Format::Json if rows.len() == 1 => json(&PointsOut {
                    bound_id: rows[0].0,
                    points: rows[0].1.clone(),
                })?,
                Format::Json => json(
                    &rows
                        .iter()
                        .map(|(id, pts)| PointsOut {
                            bound_id: *id,
                            points: pts.clone(),
                        })
                        .collect::<Vec<_>>(),
                )?,
            }))
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, errw: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { errw } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(errw, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let written = match &cli.out {
        Some(path) => {
            std::fs::write(path, &report.body).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => out
            .write_all(report.body.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(errw, "error: {e}");
        return EXIT_ERROR;
    }
    if report.code == EXIT_VIOLATION {
        let _ = writeln!(errw, "violation found");
    }
    report.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut errw = Vec::new();
        let argv = std::iter::once("bssc").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut errw);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(errw).unwrap(),
        )
    }

    #[test]
    fn capacity_json() {
        let (code, out, _) = call(&["capacity"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["capacity"].as_f64().unwrap() - 0.321928).abs() < 1e-6);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["sumrate", "--bound", "nope"]).0, 1);
        assert_eq!(call(&["verify", "--function", "10101"]).0, 1);
        assert_eq!(
            call(&["envelope", "--mode", "numeric", "--samples", "3"]).0,
            1
        );
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("capacity"));
    }

    #[test]
    fn verify_single_function() {
        let (code, out, _) = call(&["verify", "--function", "and", "--step", "0.1"]);
        assert_eq!(code, 0);
        let r: ViolationReport = serde_json::from_str(&out).unwrap();
        assert_eq!(r.func, BoolFunc2::AND);
        assert!(!r.violated);
    }

    #[test]
    fn verify_violation_exit_code() {
        let (code, _, errw) = call(&["verify", "--function", "xor", "--step", "0.1", "--tol=-1"]);
        assert_eq!(code, 2);
        assert!(errw.contains("violation"));
    }

    #[test]
    fn seeded_reduce_is_reproducible() {
        let a = call(&["reduce", "--seed", "9"]);
        let b = call(&["reduce", "--seed", "9"]);
        assert_eq!(a.0, 0);
        assert_eq!(a.1, b.1);
        let v: serde_json::Value = serde_json::from_str(&a.1).unwrap();
        assert!(v["reduced"]["shape"][0].as_u64().unwrap() <= 2);
    }

    #[test]
    fn envelope_defaults_to_csv() {
        let (code, out, _) = call(&["envelope", "--samples", "5"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("x,delta,g\n"));
        assert_eq!(out.lines().count(), 6);
    }
}
