use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nildist::chains::{solve_scalar_chain, BoundTable};
use nildist::optimize::{estimate_nu, estimate_nu_order, SearchConfig};
use nildist::parallel::apply_thread_env;
use nildist::verify::{run_cramer_exploration, run_macdonald_experiment, run_theorem1_harness, ExperimentRow};
use nildist::CMatrix;

mod manifest;

use manifest::RunManifest;

/// Distance from a matrix to the nilpotent matrices: estimates, certificates,
/// bounds and verification harnesses.
#[derive(Parser, Debug)]
#[command(name = "nildist", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified upper bound on the distance for a matrix file.
    Estimate(EstimateArgs),
    /// Like `estimate`, and writes the nearest-found nilpotent to a file.
    Nearest {
        #[command(flatten)]
        estimate: EstimateArgs,
        /// Output path for the certificate matrix JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form values for rank-m projections in dimension n.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Scalar chain problem.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// Experiment harnesses against proven lower bounds.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Exploration of conjectured values.
    #[command(subcommand)]
    Explore(ExploreCommand),
}

#[derive(Subcommand, Debug)]
enum ChainCommand {
    /// Optimal chain for a rank-one projection in dimension n.
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Rank-one projections for n = 1..=n_max.
    Macdonald {
        #[arg(long)]
        n_max: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Random instances satisfying the hypothesis of the rank-refined bound.
    Theorem1 {
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        n_max: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Where to write falsification witnesses (standard error if absent).
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExploreCommand {
    /// Rank-m projection against the conjectured value.
    Cramer {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 20)]
    sweeps: usize,
    #[arg(long, default_value_t = 8)]
    angle_grid: usize,
    #[arg(long, default_value_t = 0.5)]
    shrink: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    cert_tol: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            sweeps: self.sweeps,
            angle_grid: self.angle_grid,
            shrink: self.shrink,
            seed: self.seed,
            cert_tol: self.cert_tol,
            ..SearchConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
struct EstimateArgs {
    /// Matrix JSON file: {"n": n, "rows": [[[re, im], ...], ...]}.
    #[arg(long)]
    matrix: PathBuf,
    /// Nilpotency order: search operators with N^order = 0.
    #[arg(long)]
    order: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Failures mapped to exit statuses.
#[derive(Debug)]
enum Failure {
    /// Bad input or a numerical error: exit 1.
    Usage(String),
    /// A proven bound was beaten: exit 2.
    Falsified(String),
}

impl From<nildist::Error> for Failure {
    fn from(e: nildist::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Reads and validates a square matrix in the JSON exchange format.
fn read_matrix(path: &Path) -> Result<CMatrix, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    CMatrix::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_line<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("report serializes")
}

fn print_rows(rows: &[ExperimentRow], format: Format, manifest: &RunManifest) {
    match format {
        Format::Json => {
            println!("{}", to_line(&json!({ "manifest": manifest })));
            for row in rows {
                println!("{}", to_line(row));
            }
        }
        Format::Csv => {
            eprintln!("manifest: {}", to_line(manifest));
            println!("{}", ExperimentRow::CSV_HEADER);
            for row in rows {
                println!("{}", row.csv_row());
            }
        }
    }
}

fn config_value(config: &SearchConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn estimate(args: &EstimateArgs, manifest: &mut RunManifest) -> Result<(Value, CMatrix), Failure> {
    let a = read_matrix(&args.matrix)?;
    let config = args.search.config();
    manifest.seed = config.seed;
    manifest.config = Some(config_value(&config));
    let bound = match args.order {
        Some(order) => estimate_nu_order(&a, order, &config)?,
        None => estimate_nu(&a, &config)?,
    };
    let certificate = bound.certificate.clone();
    Ok((serde_json::to_value(&bound).expect("bound serializes"), certificate))
}

fn run(cli: Cli, mut manifest: RunManifest) -> Result<(), Failure> {
    match cli.command {
        Command::Estimate(args) => {
            let (result, _) = estimate(&args, &mut manifest)?;
            manifest.finish();
            println!("{}", to_line(&json!({ "manifest": manifest, "result": result })));
        }
        Command::Nearest { estimate: args, out } => {
            let (result, certificate) = estimate(&args, &mut manifest)?;
            std::fs::write(&out, certificate.to_json() + "\n")
                .map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
            manifest.finish();
            println!(
                "{}",
                to_line(&json!({ "manifest": manifest, "result": result, "certificate_path": out }))
            );
        }
        Command::Bound { n, m, format } => {
            let table = BoundTable::new(n, m)?;
            manifest.finish();
            match format {
                Format::Json => println!("{}", to_line(&json!({ "manifest": manifest, "result": table }))),
                Format::Csv => {
                    eprintln!("manifest: {}", to_line(&manifest));
                    println!("{}", BoundTable::CSV_HEADER);
                    println!("{}", table.csv_row());
                }
            }
        }
        Command::Chain(ChainCommand::Solve { n, tol }) => {
            let solution = solve_scalar_chain(n, tol)?;
            manifest.finish();
            println!("{}", to_line(&json!({ "manifest": manifest, "result": solution })));
        }
        Command::Verify(VerifyCommand::Macdonald { n_max, search, format }) => {
            let config = search.config();
            manifest.seed = config.seed;
            manifest.config = Some(config_value(&config));
            let rows = run_macdonald_experiment(n_max, &config)?;
            manifest.finish();
            print_rows(&rows, format, &manifest);
            if let Some(bad) = rows.iter().find(|r| r.is_falsification()) {
                return Err(Failure::Falsified(format!("n = {}: gap {:e}", bad.n, bad.gap)));
            }
        }
        Command::Verify(VerifyCommand::Theorem1 {
            trials,
            n_max,
            search,
            format,
            witness_out,
        }) => {
            let config = search.config();
            manifest.seed = config.seed;
            manifest.config = Some(config_value(&config));
            let report = run_theorem1_harness(trials, n_max, &config, config.seed)?;
            manifest.finish();
            print_rows(&report.rows, format, &manifest);
            if format == Format::Json {
                println!(
                    "{}",
                    to_line(&json!({ "summary": { "min_gap": report.min_gap, "falsifications": report.falsifications.len() } }))
                );
            }
            if !report.falsifications.is_empty() {
                let dump = serde_json::to_string_pretty(&report.falsifications).expect("witness serializes");
                match witness_out {
                    Some(path) => std::fs::write(&path, dump)?,
                    None => eprintln!("{dump}"),
                }
                return Err(Failure::Falsified(format!(
                    "{} trial(s) beat the proven bound; min gap {:e}",
                    report.falsifications.len(),
                    report.min_gap
                )));
            }
        }
        Command::Explore(ExploreCommand::Cramer { n, m, search, format }) => {
            let config = search.config();
            manifest.seed = config.seed;
            manifest.config = Some(config_value(&config));
            let row = run_cramer_exploration(n, m, &config, config.seed)?;
            manifest.finish();
            print_rows(std::slice::from_ref(&row), format, &manifest);
            if row.is_falsification() {
                return Err(Failure::Falsified(format!("gap {:e} on a proven case", row.gap)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = apply_thread_env() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let manifest = RunManifest::start(&argv);
    match run(cli, manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Falsified(message)) => {
            eprintln!("FALSIFICATION: {message}");
            ExitCode::from(2)
        }
    }
}
