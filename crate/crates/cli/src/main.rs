//! Command-line driver: moment sweeps over a rho grid, limit-regime runs
//! against the exact constants, closed-form evaluation, and the validation
//! suite. Output is CSV or JSON; identical configuration and seed give
//! byte-identical output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use llr_core::analytic::{self, AnalyticError};
use llr_core::limit_processes::BrownianGridConfig;
use llr_core::montecarlo::{self, EstimateRow, McError, Model};
use llr_core::poisson_llr::{Side, TruncationPolicy};
use llr_core::rng_streams::SeedSpec;
use llr_core::validation::{self, ValidationConfig};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const DEFAULT_N: u64 = 100_000;
const DEFAULT_SEED: u64 = 42;
const DEFAULT_CHUNK: u64 = 4096;
const DEFAULT_MARGIN: f64 = 40.0;
const DEFAULT_H: f64 = 0.005;
const CSV_HEADER: &str = "rho,N,B,se_B,M,se_M,E,se_E,rho2B,rho2M,truncated";

#[derive(Parser)]
#[command(name = "llr-lab", version, about = "Monte Carlo moments of limiting likelihood-ratio processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate B, M, E over a rho grid, one CSV/JSON row per grid point
    Sweep(RunArgs),
    /// Run the two limit models and compare against the exact constants
    Limits(RunArgs),
    /// Evaluate a closed form: constants, half_moment RHO Y, quarter_moment
    /// RHO Y, sqrt_increment RHO Y1 Y2, log_increment RHO DELTA pos|neg,
    /// eta_tail RHO X, eta_exp_quarter RHO, ladder LAMBDA
    Analytic {
        #[command(flatten)]
        args: RunArgs,
        /// Formula name
        formula: String,
        /// Formula parameters
        #[arg(allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// Run every acceptance check and report pass/fail per check
    Validate(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Grid as a:b:n (n log-spaced points from a to b) or a comma list
    #[arg(long = "rho-grid")]
    rho_grid: Option<String>,
    /// Replications per grid point
    #[arg(long)]
    n: Option<u64>,
    /// Root seed for all substreams
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per deterministic chunk
    #[arg(long)]
    chunk: Option<u64>,
    /// Log-weight truncation margin
    #[arg(long)]
    margin: Option<f64>,
    /// Brownian grid step
    #[arg(long)]
    h: Option<f64>,
    /// Output file (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Row output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON config file mirroring these flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validation at a tenth of the replications and doubled tolerances
    #[arg(long)]
    quick: bool,
}

#[derive(Copy, Clone, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Config-file counterpart of the flags. Unknown keys are rejected so a
/// mistyped field cannot silently fall back to a default.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    rho_grid: Option<GridField>,
    n: Option<u64>,
    seed: Option<u64>,
    chunk: Option<u64>,
    margin: Option<f64>,
    h: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    quick: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridField {
    Spec(String),
    List(Vec<f64>),
}

/// Fully resolved run parameters: defaults, then config file, then flags.
struct RunConfig {
    grid: Vec<f64>,
    n: u64,
    seed: u64,
    chunk: u64,
    margin: f64,
    h: f64,
    out: Option<PathBuf>,
    format: Format,
    quick: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Rejected(String),
    ChecksFailed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Io(_) => 2,
            CliError::Rejected(_) => 3,
            CliError::Usage(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Rejected(m)
            | CliError::ChecksFailed(m) => m,
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::RowRejected { .. } | McError::AllTruncated => {
                CliError::Rejected(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Sweep(args) => RunConfig::resolve(args).and_then(|cfg| cmd_sweep(&cfg)),
        Command::Limits(args) => RunConfig::resolve(args).and_then(|cfg| cmd_limits(&cfg)),
        Command::Analytic {
            args,
            formula,
            params,
        } => RunConfig::resolve(args).and_then(|_| cmd_analytic(formula, params)),
        Command::Validate(args) => RunConfig::resolve(args).and_then(|cfg| cmd_validate(&cfg)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("llr-lab: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

impl RunConfig {
    fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("config {}: {e}", path.display()))
                })?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| {
                    CliError::Usage(format!("config {}: {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };
        let grid = match args.rho_grid.clone().map(GridField::Spec).or(file.rho_grid) {
            Some(GridField::Spec(s)) => parse_grid(&s)?,
            Some(GridField::List(v)) => checked_grid(v)?,
            None => log_spaced(0.05, 20.0, 24),
        };
        let cfg = RunConfig {
            grid,
            n: args.n.or(file.n).unwrap_or(DEFAULT_N),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            chunk: args.chunk.or(file.chunk).unwrap_or(DEFAULT_CHUNK),
            margin: args.margin.or(file.margin).unwrap_or(DEFAULT_MARGIN),
            h: args.h.or(file.h).unwrap_or(DEFAULT_H),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            quick: args.quick || file.quick.unwrap_or(false),
        };
        if cfg.n == 0 || cfg.chunk == 0 {
            return Err(CliError::Usage("n and chunk must be positive".into()));
        }
        if !(cfg.margin.is_finite() && cfg.margin > 0.0) {
            return Err(CliError::Usage(format!("margin must be positive, got {}", cfg.margin)));
        }
        if !(cfg.h.is_finite() && cfg.h > 0.0) {
            return Err(CliError::Usage(format!("h must be positive, got {}", cfg.h)));
        }
        Ok(cfg)
    }
}

/// Parses `a:b:n` into n log-spaced points (endpoints exact) or a comma
/// list taken verbatim; either way the result must be positive, finite, and
/// strictly increasing.
fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Usage(format!("rho grid '{s}': {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        3 => {
            let a: f64 = parts[0].parse().map_err(|_| bad("bad start".into()))?;
            let b: f64 = parts[1].parse().map_err(|_| bad("bad end".into()))?;
            let n: usize = parts[2].parse().map_err(|_| bad("bad count".into()))?;
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > a) {
                return Err(bad("need 0 < a < b".into()));
            }
            if n < 2 {
                return Err(bad("need at least 2 points".into()));
            }
            Ok(log_spaced(a, b, n))
        }
        1 => {
            let vals = s
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| bad("bad entry".into()))?;
            checked_grid(vals)
        }
        _ => Err(bad("expected a:b:n or a comma list".into())),
    }
}

fn checked_grid(vals: Vec<f64>) -> Result<Vec<f64>, CliError> {
    if vals.is_empty() || vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Usage(
            "rho grid entries must be finite and positive".into(),
        ));
    }
    if vals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "rho grid must be strictly increasing".into(),
        ));
    }
    Ok(vals)
}

fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| match i {
            0 => a,
            i if i == n - 1 => b,
            i => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn render_rows(rows: &[EstimateRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.rho,
                    r.n,
                    r.b_hat,
                    r.se_b,
                    r.m_hat,
                    r.se_m,
                    r.e_hat,
                    r.se_e,
                    opt(r.rho2_b),
                    opt(r.rho2_m),
                    r.truncated
                );
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows are plain data");
            s.push('\n');
            s
        }
    }
}

fn emit_rows(rows: &[EstimateRow], cfg: &RunConfig) -> Result<(), CliError> {
    let text = render_rows(rows, cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let policy = TruncationPolicy {
        log_margin: cfg.margin,
        ..Default::default()
    };
    let rows = montecarlo::sweep(
        &cfg.grid,
        cfg.n,
        &SeedSpec::new(cfg.seed),
        cfg.chunk,
        &policy,
        None,
    )?;
    emit_rows(&rows, cfg)
}

fn cmd_limits(cfg: &RunConfig) -> Result<(), CliError> {
    let brown = BrownianGridConfig {
        h: cfg.h,
        log_margin: cfg.margin,
        ..Default::default()
    };
    let seed = SeedSpec::new(cfg.seed);
    let row_b = montecarlo::run_replications(
        &Model::Brownian(brown),
        cfg.n,
        &seed.child(0.0f64.to_bits()),
        cfg.chunk,
    )?;
    // The degenerate model is orders of magnitude cheaper per draw, so it
    // runs at ten times the replications.
    let row_i = montecarlo::run_replications(
        &Model::Infinity,
        cfg.n.saturating_mul(10),
        &seed.child(f64::INFINITY.to_bits()),
        cfg.chunk,
    )?;
    let k = analytic::limit_constants();
    print_limit_row("brownian", &row_b, k.b0, k.m0, k.e0);
    print_limit_row("infinity", &row_i, k.b_inf, k.m_inf, k.e_inf);
    if cfg.out.is_some() {
        emit_rows(&[row_b, row_i], cfg)?;
    }
    Ok(())
}

fn print_limit_row(name: &str, row: &EstimateRow, b: f64, m: f64, e: f64) {
    let z = |est: f64, se: f64, exact: f64| (est - exact) / se;
    println!("{name}  N={}  truncated={}", row.n, row.truncated);
    for (label, est, se, exact) in [
        ("B", row.b_hat, row.se_b, b),
        ("M", row.m_hat, row.se_m, m),
        ("E", row.e_hat, row.se_e, e),
    ] {
        println!(
            "  {label}  {est:.6}  se {se:.2e}  exact {exact:.6}  z {:+.2}",
            z(est, se, exact)
        );
    }
}

fn cmd_analytic(formula: &str, params: &[String]) -> Result<(), CliError> {
    let num = |i: usize| -> Result<f64, CliError> {
        params
            .get(i)
            .ok_or_else(|| CliError::Usage(format!("{formula}: missing parameter {}", i + 1)))?
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("{formula}: parameter {} is not a number", i + 1)))
    };
    match formula {
        "constants" => {
            let k = analytic::limit_constants();
            println!("zeta3 {:.12}", k.zeta3);
            println!("B0 {:.12}", k.b0);
            println!("M0 {:.12}", k.m0);
            println!("E0 {:.12}", k.e0);
            println!("Binf {:.12}", k.b_inf);
            println!("Minf {:.12}", k.m_inf);
            println!("Einf {:.12}", k.e_inf);
        }
        "half_moment" => println!("{:.12}", analytic::half_moment(num(0)?, num(1)?)?),
        "quarter_moment" => println!("{:.12}", analytic::quarter_moment(num(0)?, num(1)?)?),
        "sqrt_increment" => println!(
            "{:.12}",
            analytic::sqrt_increment_second_moment(num(0)?, num(1)?, num(2)?)?
        ),
        "log_increment" => {
            let side = match params.get(2).map(String::as_str) {
                Some("pos") => Side::Positive,
                Some("neg") => Side::Negative,
                other => {
                    return Err(CliError::Usage(format!(
                        "log_increment: side must be pos or neg, got {other:?}"
                    )))
                }
            };
            let (mean, second) = analytic::log_increment_moments(num(0)?, num(1)?, side)?;
            println!("mean {mean:.12}");
            println!("second {second:.12}");
        }
        "eta_tail" => println!("{:.12}", analytic::eta_tail(num(0)?, num(1)?)?),
        "eta_exp_quarter" => println!("{:.12}", analytic::eta_exp_quarter_moment(num(0)?)?),
        "ladder" => println!("{:.12}", analytic::solve_ladder_rate(num(0)?)?),
        other => {
            return Err(CliError::Usage(format!(
                "unknown formula '{other}' (try: constants, half_moment, quarter_moment, \
                 sqrt_increment, log_increment, eta_tail, eta_exp_quarter, ladder)"
            )))
        }
    }
    Ok(())
}

fn cmd_validate(cfg: &RunConfig) -> Result<(), CliError> {
    let vcfg = ValidationConfig {
        seed: cfg.seed,
        n_scale: if cfg.quick { 0.1 } else { 1.0 },
        tol_scale: if cfg.quick { 2.0 } else { 1.0 },
    };
    let outcomes = validation::run_all(&vcfg);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        println!("{}", o.line());
    }
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        Err(CliError::ChecksFailed(format!("{failed} checks failed")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_range_form() {
        let g = parse_grid("0.05:20:24").unwrap();
        assert_eq!(g.len(), 24);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[23], 20.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        // Log spacing: constant ratio between neighbours.
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_list_form() {
        assert_eq!(parse_grid("0.1, 0.5,2").unwrap(), vec![0.1, 0.5, 2.0]);
        assert!(parse_grid("0.5,0.1").is_err());
        assert!(parse_grid("0.1,0.1").is_err());
        assert!(parse_grid("-1,2").is_err());
        assert!(parse_grid("0:1:5").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn csv_rendering_blank_optionals() {
        let row = EstimateRow {
            rho: f64::INFINITY,
            n: 10,
            b_hat: 1.0,
            se_b: 0.1,
            m_hat: 2.0,
            se_m: 0.2,
            e_hat: 0.5,
            se_e: 0.05,
            rho2_b: None,
            rho2_m: None,
            truncated: 0,
            seed: 42,
        };
        let text = render_rows(&[row], Format::Csv);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("inf,10,1,0.1,2,0.2,0.5,0.05,,,0"));
        assert_eq!(lines.next(), None);
        assert!(!text.contains('\r'));
    }
}
