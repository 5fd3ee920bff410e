use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracmax::commands::{cmd_decompose, cmd_solve, cmd_sweep, cmd_validate, SweepParam};
use fracmax::validate::Suite;
use fracmax::{CliError, CliResult};

/// Fractional Maxwell and fractional Helmholtz toolkit on a periodic box.
#[derive(Debug, Parser)]
#[command(name = "fracmax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scattering problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run invariant suites and print a pass/fail table.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the table to `<out>/validate.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a stored vector field into fractional Helmholtz potentials.
    Decompose {
        /// Rank-3 field file.
        field: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve once per parameter value and aggregate the results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of s, k, amplitude.
        #[arg(long)]
        param: String,
        /// Comma separated, strictly monotone.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { config, out, seed } => {
            let summary = cmd_solve(&config, out.as_deref(), seed)?;
            let r = &summary.report;
            println!(
                "converged in {} iterations, relative residual {}",
                r.get("iterations").unwrap_or("?"),
                r.get("final_relative_residual").unwrap_or("?")
            );
        }
        Command::Validate { suite, n, seed, out } => {
            let suite: Suite = suite.parse()?;
            let mut stdout = std::io::stdout().lock();
            cmd_validate(suite, n, seed, out.as_deref(), &mut stdout)?;
            stdout.flush().map_err(|e| CliError::io("<stdout>", e))?;
        }
        Command::Decompose { field, s, out } => {
            let report = cmd_decompose(&field, s, &out)?;
            println!(
                "reconstruction error {}",
                report.get("reconstruction_error").unwrap_or("?")
            );
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            seed,
        } => {
            let param: SweepParam = param.parse()?;
            let rows = cmd_sweep(&config, param, &values, out.as_deref(), seed)?;
            println!("{} solves completed", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracmax: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
