use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use divform::cli::{emit, parse_scenario, run, RunOptions, EXIT_CONFIG};
use divform::expressions::parse;
use divform::geometry::ScalarField;
use divform::oracle::{disk_spectrum, interval_spectrum, rectangle_spectrum};

#[derive(Parser)]
#[command(
    name = "divform",
    version,
    about = "Dirichlet spectra of weighted divergence-form operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print or write its report.
    Run {
        scenario: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        refinements: Option<u32>,
        /// Require positive, convergent margins over three refinements.
        #[arg(long)]
        strict_continuum: bool,
        #[arg(long, value_name = "PATH")]
        emit_csv: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        emit_matrices: Option<PathBuf>,
        /// Relative slack for inequality checks.
        #[arg(long, value_name = "REL")]
        slack: Option<f64>,
    },
    /// Print closed-form Dirichlet eigenvalues of the flat Laplacian.
    Oracle {
        domain: OracleDomain,
        #[arg(long)]
        count: usize,
        /// Interval length, rectangle width or disk radius.
        #[arg(long, default_value_t = 1.0)]
        size: f64,
        /// Rectangle height.
        #[arg(long, default_value_t = 1.0)]
        height: f64,
    },
    /// Evaluate an expression and its gradient at a point.
    CheckExpr {
        expr: String,
        /// Coordinates as `x1=..,x2=..`.
        #[arg(long)]
        at: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleDomain {
    Interval,
    Rectangle,
    Disk,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn parse_point(at: &str) -> Result<Vec<f64>, String> {
    let mut coords: Vec<(usize, f64)> = Vec::new();
    for part in at.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| format!("`{part}` is not of the form xi=value"))?;
        let idx = name
            .trim()
            .strip_prefix('x')
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| format!("unknown coordinate `{name}`"))?;
        let v = value
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("`{value}`: {e}"))?;
        coords.push((idx, v));
    }
    let dim = coords.iter().map(|c| c.0).max().unwrap_or(0);
    let mut p = vec![f64::NAN; dim];
    for (i, v) in coords {
        p[i - 1] = v;
    }
    if let Some(i) = p.iter().position(|v| v.is_nan()) {
        return Err(format!("coordinate x{} is missing", i + 1));
    }
    Ok(p)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            refinements,
            strict_continuum,
            emit_csv,
            emit_matrices,
            slack,
        } => {
            let text = match fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => return config_error(format!("{}: {e}", scenario.display())),
            };
            let s = match parse_scenario(&text) {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            if let Some(rel) = slack.filter(|r| !(*r >= 0.0)) {
                return config_error(format!("--slack must be non-negative, got {rel}"));
            }
            let opts = RunOptions {
                refinements: refinements.map(|r| r as usize),
                strict_continuum,
                slack,
                emit_matrices,
            };
            let report =
                match run(&s, &opts).and_then(|r| emit(&r, emit_csv.as_deref()).map(|t| (r, t))) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(e.exit_code() as u8);
                    }
                };
            let (report, json) = report;
            if report.scenario.output.report.is_none() {
                println!("{json}");
            }
            for c in &report.checks {
                let status = match c.passed() {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "skip",
                };
                eprintln!("{status:>4}  {}", c.name());
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            eprintln!("verdict: {}", report.verdict.name());
            ExitCode::from(report.verdict.exit_code() as u8)
        }
        Command::Oracle {
            domain,
            count,
            size,
            height,
        } => {
            let spectrum = match domain {
                OracleDomain::Interval => interval_spectrum(size, count),
                OracleDomain::Rectangle => rectangle_spectrum(size, height, count),
                OracleDomain::Disk => disk_spectrum(count).map(|mut s| {
                    for v in &mut s.values {
                        *v /= size * size;
                    }
                    s
                }),
            };
            match spectrum {
                Ok(s) => {
                    for (i, v) in s.values.iter().enumerate() {
                        println!("{} {v:.16e}", i + 1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => config_error(e),
            }
        }
        Command::CheckExpr { expr, at } => {
            let e = match parse(&expr) {
                Ok(e) => e,
                Err(err) => return config_error(err),
            };
            let p = match parse_point(&at) {
                Ok(p) => p,
                Err(err) => return config_error(format!("--at: {err}")),
            };
            if e.arity() > p.len() {
                return config_error(format!(
                    "expression uses x{} but --at gives {}",
                    e.arity(),
                    p.len()
                ));
            }
            let f = ScalarField::new(e, p.len(), 1);
            match (f.value(&p), f.grad(&p)) {
                (Ok(v), Ok(g)) => {
                    println!("expr: {}", f.expr());
                    println!("value: {v:.16e}");
                    let g: Vec<String> = g.iter().map(|x| format!("{x:.16e}")).collect();
                    println!("grad: [{}]", g.join(", "));
                    ExitCode::SUCCESS
                }
                (Err(err), _) | (_, Err(err)) => {
                    eprintln!("evaluation error: {err}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
