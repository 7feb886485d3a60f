use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kksolve::run::{cmd_converge, cmd_simulate, cmd_verify, CliOptions};

/// Upwind solver and verification harness for a 2x2 system of
/// conservation laws with a radial flux.
#[derive(Parser)]
#[command(name = "kksolve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output.directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Config override as a dotted KEY=VALUE path, repeatable
    /// (e.g. --override integrator.cfl=0.25).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Suppress progress and result tables on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots, series, and diagnostics.
    Simulate(CommonArgs),
    /// Run with the full inequality suite; exit 0 iff every check passes.
    Verify(CommonArgs),
    /// Run a resolution ladder; report self-convergence rates and
    /// weak-solution residuals; exit 0 iff thresholds are met.
    Converge(CommonArgs),
}

impl CommonArgs {
    fn into_options(self) -> CliOptions {
        CliOptions {
            config: self.config,
            output: self.output,
            overrides: self.overrides,
            quiet: self.quiet,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args.into_options()),
        Command::Verify(args) => cmd_verify(&args.into_options()),
        Command::Converge(args) => cmd_converge(&args.into_options()),
    };
    ExitCode::from(code as u8)
}
