//! `liegeo`: command-line front end.

mod commands;

use clap::{Parser, Subcommand};
use liegeo::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "liegeo", version, about = "Lie sphere geometry of Legendre surfaces and curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input file (JSON, or CSV for surface grids).
    #[arg(long = "in", global = true, value_name = "PATH")]
    input: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Tolerance override for the command's main test.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Series order (cauchy) or difference/jet order (other commands).
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Evaluation grid as u0,u1,v0,v1,nu,nv.
    #[arg(long, global = true, value_parser = commands::parse_window)]
    window: Option<commands::Window>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Extra mesh (.obj) or field table (.csv) written by `cauchy`.
    #[arg(long, global = true, value_name = "PATH")]
    export: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Euclidean surface grid to Legendre lift.
    Lift,
    /// Normal frame, invariants and residual report.
    Invariants,
    /// Euler-Lagrange report.
    CheckMinimal,
    /// Frenet frame and curvatures of a polarized Legendre curve.
    Frenet,
    /// Curve with prescribed curvatures.
    SynthCurve,
    /// Dimensions, ranks and polar spaces of the minimal-surface system.
    EdsReport,
    /// Series solution of the Cauchy problem with verification.
    Cauchy,
    /// OBJ mesh of the Euclidean projection.
    ExportObj,
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("LIEGEO_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidInput(format!("LIEGEO_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = commands::RunConfig {
        command: cli.command,
        input: cli.input,
        output: cli.out,
        tol: cli.tol,
        order: cli.order,
        window: cli.window,
        seed: cli.seed,
        samples: cli.samples,
        export: cli.export,
    };
    let status = init_threads().and_then(|_| commands::run(&cfg));
    match status {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("liegeo: error [{}]: {e}", e.code());
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
