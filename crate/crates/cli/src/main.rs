//! Batch front-end for the potential-theory toolkit.
//!
//! Exit codes: 0 all checks pass, 1 identity/inequality violation,
//! 2 usage or schema error, 3 resource/budget exhaustion.

use clap::{Parser, Subcommand, ValueEnum};
use polypotential::error::Error;
use polypotential_cli::{
    parse_f64_range, parse_usize_list, run_constants, run_identities, run_solve, NormsFile,
    OutputFormat, RunConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polypotential", version, about = "Polyharmonic Dirichlet potentials on the unit ball: identity suites, solves and constant tables")]
struct Cli {
    /// RNG seed recorded in every output.
    #[arg(long, global = true, default_value_t = 12345)]
    seed: u64,

    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the closed-form vs quadrature identity suite.
    Identities {
        /// Dimensions, e.g. "3,4" or "3..5".
        #[arg(long)]
        n: String,
        /// Output file (UTF-8 JSON or CSV).
        #[arg(long)]
        out: PathBuf,
        /// Override the per-n relative tolerance of the mass identities.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the sphere quadrature level.
        #[arg(long)]
        sphere_level: Option<usize>,
        /// Override the radial node count.
        #[arg(long)]
        radial: Option<usize>,
    },
    /// Solve a problem spec at a list of points.
    Solve {
        /// Problem spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Points CSV (one point per line, n comma-separated floats).
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sphere_level: Option<usize>,
        #[arg(long)]
        radial: Option<usize>,
    },
    /// Emit the constants table over an (n, K) grid.
    Constants {
        /// Dimensions, e.g. "3..5".
        #[arg(long)]
        n: String,
        /// K grid, e.g. "1.0..2.0:0.1".
        #[arg(long = "K")]
        k: String,
        /// JSON file with {"phi_norms": [...], "q": optional}.
        #[arg(long)]
        norms: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn infer_format(cli_choice: Option<FormatArg>, out: &Path) -> OutputFormat {
    match cli_choice {
        Some(FormatArg::Json) => OutputFormat::Json,
        Some(FormatArg::Csv) => OutputFormat::Csv,
        None => match out.extension().and_then(|e| e.to_str()) {
            Some("csv") => OutputFormat::Csv,
            _ => OutputFormat::Json,
        },
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BudgetExceeded { .. } | Error::ResourceLimit(_) => 3,
        _ => 2,
    }
}

fn configure_threads() {
    if let Ok(text) = std::env::var("POLYPOTENTIAL_THREADS") {
        if let Ok(threads) = text.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text)
        .map_err(|e| Error::Schema(format!("cannot write {}: {e}", path.display())))
}

fn real_main() -> Result<u8, Error> {
    configure_threads();
    let cli = Cli::parse();
    match cli.command {
        Commands::Identities {
            n,
            out,
            tol,
            sphere_level,
            radial,
        } => {
            let cfg = RunConfig {
                seed: cli.seed,
                format: infer_format(cli.format, &out),
                tol,
                sphere_level,
                radial,
            };
            let ns = parse_usize_list(&n)?;
            let (text, all_pass) = run_identities(&ns, &cfg)?;
            write_file(&out, &text)?;
            Ok(if all_pass { 0 } else { 1 })
        }
        Commands::Solve {
            spec,
            points,
            out,
            sphere_level,
            radial,
        } => {
            let cfg = RunConfig {
                seed: cli.seed,
                format: infer_format(cli.format, &out),
                tol: None,
                sphere_level,
                radial,
            };
            let spec_text = read_file(&spec)?;
            let points_text = read_file(&points)?;
            // budget exhaustion must suppress partial output
            let text = run_solve(&spec_text, &points_text, &cfg)?;
            write_file(&out, &text)?;
            Ok(0)
        }
        Commands::Constants { n, k, norms, out } => {
            let cfg = RunConfig {
                seed: cli.seed,
                format: infer_format(cli.format, &out),
                tol: None,
                sphere_level: None,
                radial: None,
            };
            let ns = parse_usize_list(&n)?;
            let ks = parse_f64_range(&k)?;
            let norms = match norms {
                Some(path) => NormsFile::from_json(&read_file(&path)?)?,
                None => NormsFile::default(),
            };
            let text = run_constants(&ns, &ks, &norms, &cfg)?;
            write_file(&out, &text)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
