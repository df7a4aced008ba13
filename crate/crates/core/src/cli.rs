//! Command-line front end: argument parsing, dispatch, and CSV emission.
//!
//! All numeric output uses 12-digit scientific notation and LF line
//! endings, so identical invocations produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    snapshot_error_table, spatial_convergence, temporal_convergence, ConvergenceMode,
    ConvergenceTable,
};
use crate::error::Error;
use crate::problem::{
    builtin, builtin_names, check_compatibility, load_problem, CompatibilityReport, ProblemSpec,
    DEFAULT_QUAD_N,
};
use crate::solver::{solve, SolutionRecord};
use crate::stability::{stability_report, DEFAULT_STABILITY_TOL};

/// Compatibility residuals larger than this fail `check` and `--strict`.
pub const CHECK_TOL: f64 = 1e-8;

const EXIT_OK: u8 = 0;
const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "haarwave",
    version,
    about = "Wave-equation solver with a nonlocal integral condition, \
             discretized by Haar wavelet collocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write solution and summary CSV files.
    Solve(SolveArgs),
    /// Compute the amplification-matrix spectrum and verdict.
    Stability(StabilityArgs),
    /// Run a convergence study over levels or time steps.
    Converge(ConvergeArgs),
    /// Check the compatibility conditions of a problem's data.
    Check(CheckArgs),
    /// List the built-in problems.
    List,
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in problem name or path to a problem JSON file.
    #[arg(long)]
    problem: String,
    /// Resolution level; the basis has 2^(J+1) members.
    #[arg(long = "J")]
    j: u32,
    /// Time step.
    #[arg(long)]
    dt: f64,
    /// Final time; must be a whole number of steps.
    #[arg(long = "T")]
    t_final: f64,
    /// Snapshot times, comma separated; default is the final time only.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Output directory for the CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Refuse to run when the compatibility conditions fail.
    #[arg(long)]
    strict: bool,
    /// Simpson subintervals for compatibility integrals.
    #[arg(long = "quad-n", default_value_t = DEFAULT_QUAD_N)]
    quad_n: usize,
}

#[derive(Args)]
struct StabilityArgs {
    /// Resolution level; the companion matrix has 2^(J+2) rows.
    #[arg(long = "J")]
    j: u32,
    /// Time step; zero probes the degenerate limit.
    #[arg(long)]
    dt: f64,
    /// Output directory for spectrum.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Refine the resolution level at fixed dt.
    Space,
    /// Refine the time step at fixed level.
    Time,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Built-in problem name or path to a problem JSON file.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Levels for space mode, comma separated.
    #[arg(long = "J-list", value_delimiter = ',')]
    j_list: Option<Vec<u32>>,
    /// Steps for time mode, comma separated.
    #[arg(long = "dt-list", value_delimiter = ',')]
    dt_list: Option<Vec<f64>>,
    /// Fixed level for time mode.
    #[arg(long = "J")]
    j: Option<u32>,
    /// Fixed step for space mode.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time; rounded to the nearest whole number of steps per run.
    #[arg(long = "T")]
    t_final: f64,
    /// Output directory for convergence.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Built-in problem name or path to a problem JSON file.
    #[arg(long)]
    problem: String,
    /// Simpson subintervals for the integral residuals.
    #[arg(long = "quad-n", default_value_t = DEFAULT_QUAD_N)]
    quad_n: usize,
}

/// Parses the process arguments and runs one command.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Error> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Check(args) => cmd_check(args),
        Command::List => {
            for name in builtin_names() {
                println!("{name}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn load_spec(source: &str) -> Result<ProblemSpec, Error> {
    if builtin_names().contains(&source) {
        builtin(source)
    } else {
        load_problem(source)
    }
}

/// 12 significant digits, scientific notation.
fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

/// File-name label for a snapshot time: the shortest exact decimal, with
/// a trailing `.0` so whole numbers stay recognizably times.
fn time_label(t: f64) -> String {
    let mut s = format!("{t}");
    if !s.contains('.') && !s.contains('e') {
        s.push_str(".0");
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn print_compatibility(report: &CompatibilityReport) {
    for (k, label) in CompatibilityReport::LABELS.iter().enumerate() {
        let verdict = if report.pass[k] { "pass" } else { "FAIL" };
        println!(
            "{label}: residual {} [{verdict}]",
            sci(report.residuals[k])
        );
    }
    let overall = if report.all_pass() {
        "compatible"
    } else {
        "INCOMPATIBLE"
    };
    println!("verdict: {overall} (tolerance {})", sci(report.tolerance));
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Error> {
    let spec = load_spec(&args.problem)?;
    if args.strict {
        let report = check_compatibility(&spec, CHECK_TOL, args.quad_n)?;
        if !report.all_pass() {
            print_compatibility(&report);
            eprintln!("error: compatibility conditions fail; not solving");
            return Ok(EXIT_VERDICT);
        }
    }
    let times = args.times.unwrap_or_else(|| vec![args.t_final]);
    let record = solve(&spec, args.j, args.dt, args.t_final, &times)?;
    ensure_dir(&args.out)?;
    write_solution_files(&args.out, &record)?;
    Ok(EXIT_OK)
}

fn write_solution_files(out: &Path, record: &SolutionRecord) -> Result<(), Error> {
    let has_exact = record
        .snapshots
        .first()
        .map(|s| s.exact_collocation.is_some())
        .unwrap_or(false);
    let mut summary = String::from("t,max_error,l2_error\n");
    for snap in &record.snapshots {
        let mut csv = String::new();
        if has_exact {
            csv.push_str("x,u_exact,u_approx,abs_error\n");
            for row in &snap.report {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    sci(row.x),
                    sci(row.exact.unwrap()),
                    sci(row.approx),
                    sci(row.abs_error.unwrap())
                ));
            }
            let table = snapshot_error_table(&record.problem, snap)?;
            summary.push_str(&format!(
                "{},{},{}\n",
                sci(snap.t),
                sci(table.max_error),
                sci(table.l2_error)
            ));
        } else {
            csv.push_str("x,u_approx\n");
            for row in &snap.report {
                csv.push_str(&format!("{},{}\n", sci(row.x), sci(row.approx)));
            }
            summary.push_str(&format!("{},,\n", sci(snap.t)));
        }
        let name = format!("solution_{}.csv", time_label(snap.t));
        write_file(&out.join(name), &csv)?;
    }
    write_file(&out.join("summary.csv"), &summary)
}

fn cmd_stability(args: StabilityArgs) -> Result<u8, Error> {
    let report = stability_report(args.j, args.dt, DEFAULT_STABILITY_TOL)?;
    ensure_dir(&args.out)?;
    let mut csv = String::from("re,im,abs\n");
    for e in &report.eigenvalues {
        csv.push_str(&format!("{},{},{}\n", sci(e.re), sci(e.im), sci(e.norm())));
    }
    write_file(&args.out.join("spectrum.csv"), &csv)?;
    println!("spectral radius: {}", sci(report.spectral_radius));
    if report.stable {
        println!("verdict: stable (radius within 1 + {})", sci(report.tolerance));
        Ok(EXIT_OK)
    } else {
        println!(
            "verdict: unstable (radius exceeds 1 + {})",
            sci(report.tolerance)
        );
        Ok(EXIT_VERDICT)
    }
}

fn usage_error(message: &str) -> Result<u8, Error> {
    eprintln!("error: {message}");
    Ok(EXIT_USAGE)
}

fn cmd_converge(args: ConvergeArgs) -> Result<u8, Error> {
    let spec = load_spec(&args.problem)?;
    let table = match args.mode {
        Mode::Space => {
            let Some(levels) = args.j_list.as_deref().filter(|l| !l.is_empty()) else {
                return usage_error("space mode needs --J-list");
            };
            let Some(dt) = args.dt else {
                return usage_error("space mode needs --dt");
            };
            spatial_convergence(&spec, levels, dt, args.t_final)?
        }
        Mode::Time => {
            let Some(dts) = args.dt_list.as_deref().filter(|l| !l.is_empty()) else {
                return usage_error("time mode needs --dt-list");
            };
            let Some(j) = args.j else {
                return usage_error("time mode needs --J");
            };
            temporal_convergence(&spec, j, dts, args.t_final)?
        }
    };
    ensure_dir(&args.out)?;
    let csv = convergence_csv(&table);
    write_file(&args.out.join("convergence.csv"), &csv)?;
    print!("{csv}");
    Ok(EXIT_OK)
}

fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut csv = String::from("param,max_error,l2_error,observed_order\n");
    for row in &table.rows {
        let param = match table.mode {
            ConvergenceMode::Spatial => format!("{}", row.param as u64),
            ConvergenceMode::Temporal => sci(row.param),
        };
        let order = row.observed_order.map(sci).unwrap_or_default();
        csv.push_str(&format!(
            "{param},{},{},{order}\n",
            sci(row.max_error),
            sci(row.l2_error)
        ));
    }
    csv
}

fn cmd_check(args: CheckArgs) -> Result<u8, Error> {
    let spec = load_spec(&args.problem)?;
    let report = check_compatibility(&spec, CHECK_TOL, args.quad_n)?;
    print_compatibility(&report);
    if report.all_pass() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VERDICT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format_matches_the_pinned_shape() {
        assert_eq!(sci(0.6065306597126334), "6.065306597126e-1");
        assert_eq!(sci(0.0), "0.000000000000e0");
        assert_eq!(sci(-123.456), "-1.234560000000e2");
    }

    #[test]
    fn time_labels_keep_a_decimal_point() {
        assert_eq!(time_label(1.0), "1.0");
        assert_eq!(time_label(0.25), "0.25");
        assert_eq!(time_label(10.0), "10.0");
        assert_eq!(time_label(1e-9), "0.000000001");
    }

    #[test]
    fn argument_grammar_parses() {
        let cli = Cli::try_parse_from([
            "haarwave", "solve", "--problem", "example1", "--J", "4", "--dt", "1e-3", "--T",
            "0.1", "--times", "0.05,0.1", "--strict",
        ])
        .unwrap();
        match cli.command {
            Command::Solve(args) => {
                assert_eq!(args.j, 4);
                assert_eq!(args.times.as_deref(), Some(&[0.05, 0.1][..]));
                assert!(args.strict);
                assert_eq!(args.quad_n, DEFAULT_QUAD_N);
            }
            _ => panic!("parsed into the wrong command"),
        }
        assert!(Cli::try_parse_from(["haarwave", "solve", "--problem", "x"]).is_err());
        assert!(Cli::try_parse_from([
            "haarwave", "converge", "--problem", "x", "--mode", "sideways", "--T", "1",
        ])
        .is_err());
    }

    #[test]
    fn convergence_rows_render_mode_specific_params() {
        let table = ConvergenceTable {
            mode: ConvergenceMode::Spatial,
            rows: vec![
                crate::analysis::ConvergenceRow {
                    param: 3.0,
                    max_error: 1e-3,
                    l2_error: 5e-4,
                    observed_order: None,
                },
                crate::analysis::ConvergenceRow {
                    param: 4.0,
                    max_error: 2.5e-4,
                    l2_error: 1.2e-4,
                    observed_order: Some(2.0),
                },
            ],
        };
        let csv = convergence_csv(&table);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "param,max_error,l2_error,observed_order");
        assert!(lines[1].starts_with("3,1.000000000000e-3,"));
        assert!(lines[1].ends_with(","));
        assert!(lines[2].starts_with("4,"));
        assert!(lines[2].ends_with(",2.000000000000e0"));
        let table = ConvergenceTable {
            mode: ConvergenceMode::Temporal,
            rows: vec![crate::analysis::ConvergenceRow {
                param: 1e-3,
                max_error: 1e-5,
                l2_error: 1e-5,
                observed_order: None,
            }],
        };
        let csv = convergence_csv(&table);
        assert!(csv.lines().nth(1).unwrap().starts_with("1.000000000000e-3,"));
    }
}
