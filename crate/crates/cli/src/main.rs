//! Command-line front end: synthesize data, fit industry groups, compare
//! substitution parameters, aggregate invested capital, and run closed-form
//! diagnostics.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 estimation failures
//! (enumerated on stderr). Output files are written atomically
//! (temp-then-rename), and every command is deterministic given its flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use vesfit_core::data_io::{self, ColumnMap, SynthConfig};
use vesfit_core::pipeline::{
    self, BatchReport, GroupBy, ModelFamily, MuRoute, PipelineConfig,
};
use vesfit_core::production::{
    bernoulli_residual, elasticity_of_substitution, eval_ces, eval_ves, eval_ves_intensive,
    factor_prices, ode_residual, ves_to_hl, CesParams, VesParams,
};

#[derive(Parser)]
#[command(
    name = "vesfit",
    version,
    about = "VES production-function estimation toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit all model shapes per group and write the batch report JSON.
    Fit(FitArgs),
    /// Emit the sigma-versus-mu comparison CSV from a batch report.
    Compare(CompareArgs),
    /// Generate a synthetic plant-level CSV from explicit parameters.
    Synth(SynthArgs),
    /// Aggregate invested capital per state and industry into a CSV.
    Capital(CapitalArgs),
    /// Verify closed-form identities for one parameter point.
    Check(CheckArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV of plant records.
    #[arg(long)]
    input: PathBuf,
    /// Output path for the batch report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Column to group on.
    #[arg(long, default_value = "industry_code")]
    group_by: GroupBy,
    /// Model families to race by AIC.
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        ModelFamily::Polynomial,
        ModelFamily::Exponential,
        ModelFamily::Power,
    ])]
    models: Vec<ModelFamily>,
    /// Largest polynomial degree tried.
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    /// Priority line on the CES elasticity axis.
    #[arg(long, default_value_t = 0.5)]
    sigma_threshold: f64,
    /// Upper end of the theoretically reasonable elasticity band.
    #[arg(long, default_value_t = 1.0)]
    sigma_max: f64,
    /// Preferred mu source: wage | inversion.
    #[arg(long, default_value = "wage")]
    mu_route: MuRoute,
    /// Keep only records from this year.
    #[arg(long)]
    year: Option<i32>,
    /// Master seed recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate groups sequentially instead of on the thread pool.
    #[arg(long, default_value_t = false)]
    serial: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Batch report JSON produced by `fit`.
    #[arg(long)]
    report: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Efficiency scale A.
    #[arg(long = "A")]
    efficiency: f64,
    /// Distribution weight delta in (0, 1).
    #[arg(long)]
    delta: f64,
    /// Substitution parameter rho.
    #[arg(long)]
    rho: f64,
    /// Capital-intensity substitution parameter mu.
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Number of records.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Standard deviation of the disturbance on ln(V/L).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower bound of the log-uniform K/L draw.
    #[arg(long, default_value_t = 0.25)]
    x_low: f64,
    /// Upper bound of the log-uniform K/L draw.
    #[arg(long, default_value_t = 4.0)]
    x_high: f64,
    /// Industry code stamped on the records.
    #[arg(long, default_value = "000")]
    industry_code: String,
    /// State code stamped on the records.
    #[arg(long, default_value = "SYN")]
    state: String,
    /// Year stamped on the records.
    #[arg(long, default_value_t = 2016)]
    year: i32,
    /// Omit the wage column.
    #[arg(long, default_value_t = false)]
    no_wages: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CapitalArgs {
    /// Input CSV of plant records.
    #[arg(long)]
    input: PathBuf,
    /// Keep only records from this year.
    #[arg(long)]
    year: Option<i32>,
    /// Accepted state codes; others are passed through with a warning count.
    #[arg(long, value_delimiter = ',')]
    known_states: Vec<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Efficiency scale A.
    #[arg(long = "A")]
    efficiency: f64,
    /// Distribution weight delta in (0, 1).
    #[arg(long)]
    delta: f64,
    /// Substitution parameter rho.
    #[arg(long)]
    rho: f64,
    /// Capital-intensity substitution parameter mu.
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Tolerance on the differential-equation residual.
    #[arg(long, default_value_t = 1e-8)]
    ode_tol: f64,
    /// Relative tolerance on the Euler factor-payment identity.
    #[arg(long, default_value_t = 1e-10)]
    euler_tol: f64,
    /// Relative tolerance on the CES reduction (mu = 0 only).
    #[arg(long, default_value_t = 1e-12)]
    ces_tol: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Capital(args) => cmd_capital(args),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// Write a file atomically: temp in the same directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| format!("writing {}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("renaming onto {}: {e}", path.display()))?;
    Ok(())
}

fn read_records(path: &Path) -> Result<(Vec<data_io::PlantRecord>, vesfit_core::ExclusionReport), String> {
    let file = fs::File::open(path).map_err(|e| format!("opening {}: {e}", path.display()))?;
    data_io::ingest(file, &ColumnMap::default()).map_err(|e| e.to_string())
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, String> {
    let (records, ingest_exclusions) = read_records(&args.input)?;
    let config = PipelineConfig {
        models: args.models,
        max_degree: args.max_degree,
        sigma_threshold: args.sigma_threshold,
        sigma_max: args.sigma_max,
        mu_route: args.mu_route,
        year_filter: args.year,
        group_by: args.group_by,
        known_states: Vec::new(),
        parallel: !args.serial,
        seed: args.seed,
    };
    let mut report = pipeline::run_batch(&records, &config);
    report.merge_exclusions(&ingest_exclusions);

    for g in &report.groups {
        eprintln!("group {}: ok (n = {}, best = {})", g.industry_code, g.n_used, g.best.family());
    }
    for f in &report.failures {
        eprintln!("group {}: failed: {}", f.industry_code, f.error);
    }
    write_atomic(&args.out, report.to_json_string().as_bytes())?;
    if report.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, String> {
    let raw = fs::read_to_string(&args.report)
        .map_err(|e| format!("reading {}: {e}", args.report.display()))?;
    let report: BatchReport =
        serde_json::from_str(&raw).map_err(|e| format!("parsing report: {e}"))?;
    let csv = pipeline::figure1_csv(&report.comparisons);
    write_atomic(&args.out, csv.as_bytes())?;
    let usable = report
        .comparisons
        .iter()
        .any(|c| c.sigma_ces.is_some() && c.mu_ves.is_some());
    if !report.comparisons.is_empty() && !usable {
        eprintln!(
            "error: no group carries both a CES elasticity and a mu estimate; \
             nothing to compare"
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode, String> {
    let params = VesParams::new(args.efficiency, args.delta, args.rho, args.mu)
        .map_err(|e| e.to_string())?;
    if args.mu < 0.0 {
        let reading = pipeline::mu_interpretation(args.mu).map_err(|e| e.to_string())?;
        eprintln!("warning: mu = {} is negative ({})", args.mu, reading.as_str());
    }
    let cfg = SynthConfig {
        params,
        n: args.n,
        x_low: args.x_low,
        x_high: args.x_high,
        noise_sd: args.noise,
        seed: args.seed,
        competitive_wages: !args.no_wages,
        industry_code: args.industry_code,
        state: args.state,
        year: args.year,
    };
    let generated = data_io::generate(&cfg).map_err(|e| e.to_string())?;
    if generated.noncompetitive_rows > 0 {
        eprintln!(
            "warning: {} of {} rows lie outside the competitive region; \
             the wage column stores the labor-share magnitude there",
            generated.noncompetitive_rows, args.n
        );
    }
    let mut buf = Vec::new();
    data_io::write_csv(&generated.records, &mut buf).map_err(|e| e.to_string())?;
    write_atomic(&args.out, &buf)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_capital(args: CapitalArgs) -> Result<ExitCode, String> {
    let (records, _) = read_records(&args.input)?;
    let summary = pipeline::capital_by_state(&records, args.year, &args.known_states);
    if summary.rows_outside_year > 0 {
        eprintln!("note: {} rows outside the year filter ignored", summary.rows_outside_year);
    }
    if summary.unknown_state_rows > 0 {
        eprintln!(
            "warning: {} rows carry state codes outside the known list",
            summary.unknown_state_rows
        );
    }
    write_atomic(&args.out, pipeline::figure2_csv(&summary.cells).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

const CHECK_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

fn cmd_check(args: CheckArgs) -> Result<ExitCode, String> {
    let params = VesParams::new(args.efficiency, args.delta, args.rho, args.mu)
        .map_err(|e| e.to_string())?;
    let mut all_ok = true;

    // Differential-equation residual: log form where the scale coefficient
    // exists, otherwise the algebraic form of the same equation.
    let mut max_ode = 0.0_f64;
    let form = match ves_to_hl(&params) {
        Ok(h) => {
            for x in CHECK_GRID {
                max_ode = max_ode.max(ode_residual(&h, x).map_err(|e| e.to_string())?.abs());
            }
            "log form"
        }
        Err(_) => {
            for x in CHECK_GRID {
                max_ode =
                    max_ode.max(bernoulli_residual(&params, x).map_err(|e| e.to_string())?.abs());
            }
            "algebraic form (no positive labor share)"
        }
    };
    let ode_ok = max_ode <= args.ode_tol;
    all_ok &= ode_ok;
    println!(
        "ode residual ({form}): max |r| = {max_ode:.3e} over X in {CHECK_GRID:?} -> {}",
        pass(ode_ok)
    );

    // Euler factor-payment identity.
    let mut max_euler = 0.0_f64;
    for x in CHECK_GRID {
        let y = eval_ves_intensive(&params, x).map_err(|e| e.to_string())?;
        let fp = factor_prices(&params, x).map_err(|e| e.to_string())?;
        max_euler = max_euler.max(((fp.wage + fp.rental * x - y) / y).abs());
    }
    let euler_ok = max_euler <= args.euler_tol;
    all_ok &= euler_ok;
    println!("euler identity: max |W + rX - Y|/Y = {max_euler:.3e} -> {}", pass(euler_ok));

    // CES reduction, only meaningful at mu = 0.
    if params.is_ces() {
        let ces = CesParams::new(args.efficiency, args.delta, args.rho).map_err(|e| e.to_string())?;
        let mut max_dev = 0.0_f64;
        for k in CHECK_GRID {
            for l in CHECK_GRID {
                let v = eval_ves(&params, k, l).map_err(|e| e.to_string())?;
                let c = eval_ces(&ces, k, l).map_err(|e| e.to_string())?;
                max_dev = max_dev.max(((v - c) / c).abs());
            }
        }
        let ces_ok = max_dev <= args.ces_tol;
        all_ok &= ces_ok;
        println!("ces reduction: max relative deviation = {max_dev:.3e} -> {}", pass(ces_ok));
    } else {
        println!("ces reduction: skipped (mu != 0)");
    }

    // Elasticity samples, informational.
    for x in CHECK_GRID {
        match elasticity_of_substitution(&params, x) {
            Ok(sigma) => println!("sigma(X = {x}) = {sigma:.6}"),
            Err(e) => println!("sigma(X = {x}): {e}"),
        }
    }

    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
