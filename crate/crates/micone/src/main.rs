use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use micone::conic_format::{read_conic, write_conic};
use micone::model_format::parse_model;
use micone::report::{write_trace_line, OracleReport, SolveReport, Verdict};
use micone_core::compiler::{emit_conic, CompilationMap, CompileError};
use micone_core::conic::ConicSettings;
use micone_core::dcp::{dcp_verify, DcpModel, Location, Violation, ViolationKind};
use micone_core::oa::{brute_force_solve, oa_solve_with, Clock, OaConfig, OaStatus};
use micone_core::program::ConicProgram;
use tempfile::NamedTempFile;

const EXIT_NOT_DCP: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_ORACLE: u8 = 4;

/// Outer approximation for mixed-integer conic programs.
#[derive(Parser)]
#[command(name = "micone", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the DCP rules; exit 1 with one line per violation on failure.
    Check { model: PathBuf },
    /// Compile a model to the conic instance format.
    Compile {
        model: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Solve a model or a conic instance and print a JSON result.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long = "max-iters", default_value_t = 1000)]
        max_iters: usize,
        #[arg(long = "time-limit", value_name = "SEC")]
        time_limit: Option<f64>,
        /// JSON-lines file, one record per iteration.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Cross-check against enumeration of all integer assignments.
        #[arg(long)]
        oracle: bool,
        /// Leave wall-clock fields out of the output.
        #[arg(long = "no-timing")]
        no_timing: bool,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_IO,
            msg: format!("{}: {e}", path.display()),
        }
    }
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load_model(path: &Path) -> Result<DcpModel, Failure> {
    parse_model(&read(path)?).map_err(|e| Failure::io(path, e))
}

fn describe(model: &DcpModel, v: &Violation) -> String {
    if v.kind == ViolationKind::UnboundedInteger {
        let name = v.path.first().and_then(|&i| model.vars.get(i)).map_or("?", |var| var.name.as_str());
        return format!("variable `{name}`: integer needs finite bounds");
    }
    let at = match v.location {
        Location::Objective => "objective".to_string(),
        Location::Constraint(i) => format!("constraint {i}"),
    };
    let what = match v.kind {
        ViolationKind::UndeclaredVariable => "undeclared variable",
        ViolationKind::UnknownCurvature => "curvature unknown",
        ViolationKind::NotConvex => "not convex",
        ViolationKind::NotAffine => "equality is not affine",
        ViolationKind::UnboundedInteger => unreachable!(),
    };
    format!("{at} {:?}: {what}", v.path)
}

fn compile(model: &DcpModel) -> Result<(ConicProgram, CompilationMap), Failure> {
    emit_conic(model).map_err(|e| {
        let msg = match &e {
            CompileError::NotDcp(report) => report
                .violations
                .iter()
                .map(|v| describe(model, v))
                .collect::<Vec<_>>()
                .join("\n"),
            CompileError::UnboundedInteger(_) => e.to_string(),
        };
        Failure { code: EXIT_NOT_DCP, msg }
    })
}

/// Writes next to the target and renames over it.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn is_conic(path: &Path, text: &str) -> bool {
    if path.extension().is_some_and(|e| e == "conic") {
        return true;
    }
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty());
    first == Some("VER")
}

fn check(path: &Path) -> Result<u8, Failure> {
    let model = load_model(path)?;
    let report = dcp_verify(&model);
    if report.is_ok() {
        println!("ok");
        return Ok(0);
    }
    for v in &report.violations {
        println!("{}", describe(&model, v));
    }
    Ok(EXIT_NOT_DCP)
}

struct SolveArgs {
    config: OaConfig,
    trace: Option<PathBuf>,
    oracle: bool,
    timing: bool,
}

fn solve(path: &Path, args: SolveArgs) -> Result<u8, Failure> {
    let text = read(path)?;
    let (program, model) = if is_conic(path, &text) {
        (read_conic(&text).map_err(|e| Failure::io(path, e))?, None)
    } else {
        let model = parse_model(&text).map_err(|e| Failure::io(path, e))?;
        let (p, map) = compile(&model)?;
        (p, Some((model, map)))
    };

    let clock = WallClock(Instant::now());
    let mut trace_file = match &args.trace {
        Some(t) => {
            let dir = t.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = NamedTempFile::new_in(dir).map_err(|e| Failure::io(t, e))?;
            Some(BufWriter::new(tmp))
        }
        None => None,
    };
    let mut trace_err: Option<io::Error> = None;
    let outcome = oa_solve_with(&program, &args.config, &clock, &mut |r| {
        if let (Some(w), None) = (trace_file.as_mut(), trace_err.as_ref()) {
            if let Err(e) = write_trace_line(w, r, args.timing) {
                trace_err = Some(e);
            }
        }
    })
    .map_err(|e| Failure {
        code: EXIT_IO,
        msg: format!("{}: {e}", path.display()),
    })?;
    let wall = clock.elapsed();
    if let (Some(t), Some(w)) = (&args.trace, trace_file) {
        if let Some(e) = trace_err {
            return Err(Failure::io(t, e));
        }
        let tmp = w.into_inner().map_err(|e| Failure::io(t, e.error()))?;
        tmp.persist(t).map_err(|e| Failure::io(t, e.error))?;
    }

    let mut report = SolveReport::new(&outcome);
    if let (Some(x), Some(z)) = (&outcome.x, &outcome.z) {
        report.solution = Some(match &model {
            Some((m, map)) => {
                let values = map.recover_solution(x, z).expect("solution matches the program");
                let named: serde_json::Map<String, serde_json::Value> = m
                    .vars
                    .iter()
                    .zip(values)
                    .map(|(v, val)| (v.name.clone(), serde_json::json!(val)))
                    .collect();
                serde_json::Value::Object(named)
            }
            None => serde_json::json!({ "x": x, "z": z }),
        });
    }
    let mut code = if outcome.status == OaStatus::AssumptionFailure {
        EXIT_ASSUMPTION
    } else {
        0
    };
    if args.oracle {
        let bf = brute_force_solve(&program, &ConicSettings::default()).map_err(|e| Failure {
            code: EXIT_IO,
            msg: format!("oracle: {e}"),
        })?;
        let oracle = OracleReport::new(&outcome, &bf, args.config.tol.max(1e-5));
        if oracle.verdict == Verdict::Disagree {
            code = EXIT_ORACLE;
        }
        report.oracle = Some(oracle);
    }
    if args.timing {
        report.wall_time = Some(wall);
    }
    let json = serde_json::to_string(&report).expect("report serializes");
    println!("{json}");
    Ok(code)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check { model } => check(&model),
        Command::Compile { model, output } => {
            let (program, _) = compile(&load_model(&model)?)?;
            write_atomic(&output, write_conic(&program).as_bytes())?;
            Ok(0)
        }
        Command::Solve {
            input,
            tol,
            max_iters,
            time_limit,
            trace,
            oracle,
            no_timing,
        } => {
            let config = OaConfig {
                tol,
                max_iters,
                time_limit,
                ..OaConfig::default()
            };
            solve(
                &input,
                SolveArgs {
                    config,
                    trace,
                    oracle,
                    timing: !no_timing,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
