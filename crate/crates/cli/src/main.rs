use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fw_cli::commands::{cmd_check, cmd_run, cmd_sweep, parse_bounds, print_sweep, CheckOptions, CurvatureMode};
use fw_cli::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "fw", version, about = "Frank-Wolfe runs, traces and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run config; writes the trace CSV and a summary JSON.
    Run { config: PathBuf },
    /// Audit a trace against the convergence bounds.
    Check {
        trace: PathBuf,
        /// Comma-separated bound names, or `all` for every applicable bound.
        #[arg(long, default_value = "all")]
        bounds: String,
        #[arg(long, value_enum, default_value = "exact")]
        curvature: CurvatureMode,
        /// Samples for `--curvature sampled`.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Seed for `--curvature sampled`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; defaults to `<trace stem>.check.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every `*.json` config in a directory.
    Sweep {
        dir: PathBuf,
        #[arg(short = 'j', long = "jobs", default_value_t = 1)]
        jobs: usize,
        /// Output directory; defaults to `<dir>/sweep`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { config } => {
            let s = cmd_run(&config)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            Ok(EXIT_OK)
        }
        Command::Check { trace, bounds, curvature, samples, seed, report } => {
            let opts = CheckOptions { bounds: parse_bounds(&bounds)?, curvature, samples, seed, report };
            let r = cmd_check(&trace, &opts)?;
            println!(
                "all {} checks passed (curvature {:?}, min margin {:?})",
                r.report.checks.len(),
                r.report.curvature,
                r.report.min_margin
            );
            Ok(EXIT_OK)
        }
        Command::Sweep { dir, jobs, out } => {
            let outcome = cmd_sweep(&dir, jobs, out.as_deref())?;
            let _ = print_sweep(&outcome, std::io::stdout().lock());
            Ok(outcome.exit_code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
