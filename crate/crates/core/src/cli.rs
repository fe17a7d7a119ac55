//! Command-line front end.
//!
//! Every subcommand renders into a `String`; `main` only prints it (or
//! writes it to `--out`) and exits with the returned code.
//!
//! Exit codes: 0 ok, 2 usage, 3 advantage ratio undefined, 4 unsupported
//! MUB construction, 5 MUB verification failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, serialize_beta, BoundSet};
use crate::error::{Error, Result};
use crate::game::{run_exact_quantum, run_monte_carlo, GameConfig, WorkReport};
use crate::lhs::{bloch_grid_search, lhs_sup_work, OptimizerResult, OptimizerSettings};
use crate::mub::{build_mub, is_supported, verify_mub, MubReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_XI_DOMAIN: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

pub const SCAN_HEADER: &str = "d,n,omega,beta,w_classical,w_quantum,xi,xi_over_sqrt_d";

#[derive(Debug, Parser)]
#[command(name = "steerwork", version, about = "Work extraction from steerable correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form classical and quantum work bounds
    Bounds(BoundsArgs),
    /// Play the steering protocol exactly (--shots 0) or by sampling
    Simulate(SimulateArgs),
    /// Advantage ratio over a list of prime dimensions with n = d + 1
    Scan(ScanArgs),
    /// Maximize the LHS work objective numerically
    LhsOpt(LhsOptArgs),
    /// Check the mutually-unbiased property of a constructed family
    VerifyMub(VerifyMubArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhysicsArgs {
    /// Energy gap of the quench Hamiltonians
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Inverse temperature; `inf` for zero temperature
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n_bases: usize,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n_bases: usize,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Comma-separated prime dimensions
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LhsOptArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n_bases: usize,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Bloch grid resolution for the d = 2 cross-check
    #[arg(long, default_value_t = 500)]
    pub resolution: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyMubArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n_bases: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Rendered output plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self { output, exit_code: EXIT_OK }
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidParameter(_) => EXIT_USAGE,
        Error::XiDomain { .. } => EXIT_XI_DOMAIN,
        Error::UnsupportedMub { .. } => EXIT_UNSUPPORTED,
        _ => 1,
    }
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Bounds(a) => &a.output,
            Command::Simulate(a) => &a.output,
            Command::Scan(a) => &a.output,
            Command::LhsOpt(a) => &a.output,
            Command::VerifyMub(a) => &a.output,
        }
    }
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scan(args) => cmd_scan(args),
        Command::LhsOpt(args) => cmd_lhs_opt(args),
        Command::VerifyMub(args) => cmd_verify_mub(args),
    }
}

/// Nine significant digits.
pub fn sig9(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let exponent = value.abs().log10().floor() as i32;
    if !(-4..9).contains(&exponent) {
        format!("{value:.8e}")
    } else {
        format!("{:.*}", (8 - exponent).max(0) as usize, value)
    }
}

fn opt_sig9(value: Option<f64>) -> String {
    value.map_or_else(|| "undefined".to_string(), sig9)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("report rows serialize");
    }
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

fn text_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().fold(String::new(), |mut out, (k, v)| {
        let _ = writeln!(out, "{k:<width$}  {v}");
        out
    })
}

fn validate_physics(physics: &PhysicsArgs) -> Result<()> {
    bounds::validate_parameters(2, 1, physics.omega, physics.beta)
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Outcome> {
    let set = BoundSet::evaluate(args.dim, args.n_bases, args.physics.omega, args.physics.beta)?;
    let output = match args.output.format {
        Format::Json => to_json(&set),
        Format::Csv => to_csv(&[&set]),
        Format::Text => text_table(&[
            ("d", set.d.to_string()),
            ("n", set.n.to_string()),
            ("omega", sig9(set.omega)),
            ("beta", sig9(set.beta)),
            ("rastegin", sig9(set.rastegin)),
            ("w_classical", sig9(set.w_classical)),
            ("w_quantum", sig9(set.w_quantum)),
            ("xi", opt_sig9(set.xi)),
            ("advantage", set.advantage.to_string()),
        ]),
    };
    let exit_code = if set.xi.is_some() { EXIT_OK } else { EXIT_XI_DOMAIN };
    Ok(Outcome { output, exit_code })
}

#[derive(Serialize)]
struct WorkSummaryRow<'a> {
    d: usize,
    n: usize,
    omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    beta: f64,
    mode: &'a crate::game::Mode,
    shots: u64,
    seed: u64,
    average: f64,
    stderr: Option<f64>,
    w_classical: f64,
    w_quantum: f64,
    xi: Option<f64>,
}

fn render_work_report(report: &WorkReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(&[WorkSummaryRow {
            d: report.d,
            n: report.n,
            omega: report.omega,
            beta: report.beta,
            mode: &report.mode,
            shots: report.shots,
            seed: report.seed,
            average: report.average,
            stderr: report.stderr,
            w_classical: report.w_classical,
            w_quantum: report.w_quantum,
            xi: report.xi,
        }]),
        Format::Text => {
            let mode = match report.mode {
                crate::game::Mode::Exact => "exact",
                crate::game::Mode::MonteCarlo => "monte_carlo",
            };
            let mut rows = vec![
                ("d", report.d.to_string()),
                ("n", report.n.to_string()),
                ("omega", sig9(report.omega)),
                ("beta", sig9(report.beta)),
                ("mode", mode.to_string()),
            ];
            if report.mode == crate::game::Mode::MonteCarlo {
                rows.push(("shots", report.shots.to_string()));
                rows.push(("seed", report.seed.to_string()));
            }
            rows.push(("average", sig9(report.average)));
            if report.mode == crate::game::Mode::MonteCarlo {
                rows.push(("stderr", opt_sig9(report.stderr)));
            }
            rows.push(("w_classical", sig9(report.w_classical)));
            rows.push(("w_quantum", sig9(report.w_quantum)));
            rows.push(("xi", opt_sig9(report.xi)));
            let steering = report.average > report.w_classical;
            rows.push(("steering_witnessed", steering.to_string()));
            text_table(&rows)
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let config = GameConfig::new(args.dim, args.n_bases, args.physics.omega, args.physics.beta)
        .with_shots(args.shots, args.seed);
    config.validate()?;
    let report = if args.shots == 0 {
        run_exact_quantum(&config)?
    } else {
        run_monte_carlo(&config)?
    };
    Ok(Outcome::ok(render_work_report(&report, args.output.format)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    pub beta: f64,
    pub w_classical: f64,
    pub w_quantum: f64,
    pub xi: Option<f64>,
    pub xi_over_sqrt_d: Option<f64>,
}

/// One row per dimension with `n = d + 1` bases.
pub fn scan_rows(dims: &[usize], omega: f64, beta: f64) -> Result<Vec<ScanRow>> {
    if dims.is_empty() {
        return Err(Error::InvalidParameter("--dims needs at least one dimension".into()));
    }
    bounds::validate_parameters(2, 1, omega, beta)?;
    if let Some(&d) = dims.iter().find(|&&d| !is_supported(d, d + 1)) {
        return Err(Error::UnsupportedMub { d, n: d + 1 });
    }
    Ok(dims
        .iter()
        .map(|&d| {
            let n = d + 1;
            let xi = bounds::xi(d, n, omega, beta).ok();
            ScanRow {
                d,
                n,
                omega,
                beta,
                w_classical: bounds::w_classical(d, n, omega, beta),
                w_quantum: bounds::w_quantum(d, omega, beta),
                xi,
                xi_over_sqrt_d: xi.map(|v| v / (d as f64).sqrt()),
            }
        })
        .collect())
}

pub fn cmd_scan(args: &ScanArgs) -> Result<Outcome> {
    let rows = scan_rows(&args.dims, args.physics.omega, args.physics.beta)?;
    let output = match args.output.format {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows),
        Format::Text => {
            let mut out = format!(
                "{:>4} {:>4} {:>16} {:>16} {:>16} {:>16}\n",
                "d", "n", "w_classical", "w_quantum", "xi", "xi/sqrt(d)"
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:>4} {:>4} {:>16} {:>16} {:>16} {:>16}",
                    r.d,
                    r.n,
                    sig9(r.w_classical),
                    sig9(r.w_quantum),
                    opt_sig9(r.xi),
                    opt_sig9(r.xi_over_sqrt_d)
                );
            }
            out
        }
    };
    Ok(Outcome::ok(output))
}

#[derive(Debug, Clone, Serialize)]
pub struct LhsOptReport {
    pub d: usize,
    pub n: usize,
    pub omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    pub beta: f64,
    pub seed: u64,
    pub objective: f64,
    pub rastegin: f64,
    pub achievable: f64,
    pub w_classical: f64,
    pub gap: f64,
    pub grid_objective: Option<f64>,
    pub oracle_agreement: Option<f64>,
    pub optimizer: OptimizerResult,
}

#[derive(Serialize)]
struct LhsOptRow {
    d: usize,
    n: usize,
    omega: f64,
    #[serde(serialize_with = "serialize_beta")]
    beta: f64,
    seed: u64,
    objective: f64,
    rastegin: f64,
    achievable: f64,
    w_classical: f64,
    gap: f64,
    grid_objective: Option<f64>,
    oracle_agreement: Option<f64>,
    restarts: usize,
    iterations: usize,
    converged: bool,
}

pub fn lhs_opt_report(args: &LhsOptArgs) -> Result<LhsOptReport> {
    let settings = OptimizerSettings {
        restarts: args.restarts,
        tol: args.tol,
        max_iter: args.max_iter,
        seed: args.seed,
    };
    if args.restarts == 0 {
        return Err(Error::InvalidParameter("--restarts must be at least 1".into()));
    }
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(Error::InvalidParameter("--tol must be non-negative".into()));
    }
    validate_physics(&args.physics)?;
    let set = build_mub(args.dim, args.n_bases)?;
    let sup = lhs_sup_work(args.dim, args.n_bases, args.physics.omega, args.physics.beta, &settings)?;
    let grid_objective = if args.dim == 2 {
        Some(bloch_grid_search(&set, args.resolution)?.objective)
    } else {
        None
    };
    Ok(LhsOptReport {
        d: args.dim,
        n: args.n_bases,
        omega: args.physics.omega,
        beta: args.physics.beta,
        seed: args.seed,
        objective: sup.optimizer.objective,
        rastegin: bounds::rastegin_bound(args.dim, args.n_bases),
        achievable: sup.achievable,
        w_classical: sup.bound,
        gap: sup.gap,
        grid_objective,
        oracle_agreement: grid_objective.map(|g| (g - sup.optimizer.objective).abs()),
        optimizer: sup.optimizer,
    })
}

pub fn cmd_lhs_opt(args: &LhsOptArgs) -> Result<Outcome> {
    let report = lhs_opt_report(args)?;
    let output = match args.output.format {
        Format::Json => to_json(&report),
        Format::Csv => to_csv(&[LhsOptRow {
            d: report.d,
            n: report.n,
            omega: report.omega,
            beta: report.beta,
            seed: report.seed,
            objective: report.objective,
            rastegin: report.rastegin,
            achievable: report.achievable,
            w_classical: report.w_classical,
            gap: report.gap,
            grid_objective: report.grid_objective,
            oracle_agreement: report.oracle_agreement,
            restarts: report.optimizer.restarts_used,
            iterations: report.optimizer.iterations,
            converged: report.optimizer.converged,
        }]),
        Format::Text => {
            let mut rows = vec![
                ("d", report.d.to_string()),
                ("n", report.n.to_string()),
                ("omega", sig9(report.omega)),
                ("beta", sig9(report.beta)),
                ("objective", sig9(report.objective)),
                ("rastegin", sig9(report.rastegin)),
                ("achievable", sig9(report.achievable)),
                ("w_classical", sig9(report.w_classical)),
                ("gap", sig9(report.gap)),
                ("restarts", report.optimizer.restarts_used.to_string()),
                ("converged", report.optimizer.converged.to_string()),
            ];
            if let (Some(grid), Some(diff)) = (report.grid_objective, report.oracle_agreement) {
                rows.push(("grid_objective", sig9(grid)));
                rows.push(("oracle_agreement", sig9(diff)));
            }
            text_table(&rows)
        }
    };
    Ok(Outcome::ok(output))
}

#[derive(Serialize)]
struct VerifyRow {
    d: usize,
    n: usize,
    tol: f64,
    pass: bool,
    max_deviation: f64,
    violations: usize,
}

const MAX_LISTED_VIOLATIONS: usize = 20;

fn render_mub_report(report: &MubReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(&[VerifyRow {
            d: report.d,
            n: report.n,
            tol: report.tol,
            pass: report.pass,
            max_deviation: report.max_deviation,
            violations: report.violations.len(),
        }]),
        Format::Text => {
            let mut out = text_table(&[
                ("d", report.d.to_string()),
                ("n", report.n.to_string()),
                ("tol", sig9(report.tol)),
                ("result", if report.pass { "pass" } else { "FAIL" }.to_string()),
                ("max_deviation", sig9(report.max_deviation)),
            ]);
            for v in report.violations.iter().take(MAX_LISTED_VIOLATIONS) {
                let _ = writeln!(
                    out,
                    "  |<phi_{}^{}|phi_{}^{}>| = {} (expected {})",
                    v.x, v.a, v.y, v.b, sig9(v.overlap), sig9(v.expected)
                );
            }
            if report.violations.len() > MAX_LISTED_VIOLATIONS {
                let _ = writeln!(out, "  ... {} more", report.violations.len() - MAX_LISTED_VIOLATIONS);
            }
            out
        }
    }
}

pub fn cmd_verify_mub(args: &VerifyMubArgs) -> Result<Outcome> {
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(Error::InvalidParameter("--tol must be non-negative".into()));
    }
    let set = build_mub(args.dim, args.n_bases)?;
    let report = verify_mub(&set, args.tol);
    Ok(Outcome {
        output: render_mub_report(&report, args.output.format),
        exit_code: if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        let mut full = vec!["steerwork"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).unwrap().command
    }

    #[test]
    fn scan_scaling_shape() {
        let rows = scan_rows(&[2, 3, 5, 7, 11, 13, 17, 19, 23], 1.0, 1.0).unwrap();
        let xi: Vec<f64> = rows.iter().map(|r| r.xi.unwrap()).collect();
        let ratio: Vec<f64> = rows.iter().map(|r| r.xi_over_sqrt_d.unwrap()).collect();
        assert!(xi.windows(2).all(|w| w[1] > w[0]));
        // xi / sqrt(d) falls toward 1; small d sit above the asymptotic window
        assert!(ratio.windows(2).all(|w| w[1] < w[0]));
        assert!((ratio[0] - 3.3006).abs() < 1e-4 && (ratio[1] - 2.7027).abs() < 1e-4);
        assert!(rows.iter().zip(&ratio).filter(|(r, _)| r.d >= 5).all(|(_, &q)| (1.0..=2.2).contains(&q)));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(sig9(0.268941421369995), "0.268941421");
        assert_eq!(sig9(4.66778023896922), "4.66778024");
        assert_eq!(sig9(0.0576165559648080), "0.0576165560");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(f64::INFINITY), "inf");
        assert_eq!(sig9(-2.5e-7), "-2.50000000e-7");
    }

    #[test]
    fn beta_accepts_inf() {
        match parse(&["bounds", "--dim", "2", "--n-bases", "3", "--beta", "inf"]) {
            Command::Bounds(a) => assert!(a.physics.beta.is_infinite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds_text_and_exit_codes() {
        let out = execute(&parse(&["bounds", "--dim", "2", "--n-bases", "3"])).unwrap();
        assert_eq!(out.exit_code, 0);
        assert!(out.output.contains("w_quantum    0.268941421"));
        let out = execute(&parse(&["bounds", "--dim", "2", "--n-bases", "3", "--beta", "inf"])).unwrap();
        assert_eq!(out.exit_code, EXIT_XI_DOMAIN);
        assert!(out.output.contains("w_classical"));
        assert!(out.output.contains("undefined"));
        let err = execute(&parse(&["bounds", "--dim", "2", "--n-bases", "3", "--omega=-1"])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn bounds_single_basis_has_no_advantage() {
        let out = execute(&parse(&["bounds", "--dim", "2", "--n-bases", "1", "--format", "json"])).unwrap();
        let json: serde_json::Value = serde_json::from_str(&out.output).unwrap();
        assert_eq!(json["advantage"], false);
    }

    #[test]
    fn bounds_csv() {
        let out = execute(&parse(&["bounds", "--dim", "5", "--n-bases", "6", "--beta", "0", "--format", "csv"])).unwrap();
        let mut lines = out.output.lines();
        assert_eq!(lines.next().unwrap(), "d,n,omega,beta,w_classical,w_quantum,xi,rastegin,advantage");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        let xi: f64 = fields[6].parse().unwrap();
        assert!((xi - 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn simulate_unsupported_is_exit_four() {
        let err = execute(&parse(&["simulate", "--dim", "6", "--n-bases", "7"])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_UNSUPPORTED);
    }

    #[test]
    fn scan_rejects_empty_and_unsupported() {
        let err = execute(&parse(&["scan"])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
        let err = execute(&parse(&["scan", "--dims", "2,3,4"])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_UNSUPPORTED);
    }

    #[test]
    fn scan_csv_header() {
        let out = execute(&parse(&["scan", "--dims", "2,3,5", "--format", "csv"])).unwrap();
        assert_eq!(out.output.lines().next().unwrap(), SCAN_HEADER);
        assert_eq!(out.output.lines().count(), 4);
    }

    #[test]
    fn verify_mub_exit_codes() {
        let out = execute(&parse(&["verify-mub", "--dim", "4", "--n-bases", "2"])).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        assert!(out.output.contains("pass"));
        let err = execute(&parse(&["verify-mub", "--dim", "4", "--n-bases", "3"])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_UNSUPPORTED);
        let out = execute(&parse(&["verify-mub", "--dim", "7", "--n-bases", "8", "--tol", "0"])).unwrap();
        // exact zero tolerance trips on rounding
        assert_eq!(out.exit_code, EXIT_VERIFY_FAILED);
        assert!(out.output.contains("FAIL"));
    }

    #[test]
    fn lhs_opt_qutrit() {
        let out = execute(&parse(&["lhs-opt", "--dim", "3", "--n-bases", "4", "--format", "json"])).unwrap();
        let json: serde_json::Value = serde_json::from_str(&out.output).unwrap();
        assert!(json["objective"].as_f64().unwrap() <= 2.0 / 3.0 + 1e-8);
        assert!(json["grid_objective"].is_null());
    }
}
