use std::path::PathBuf;
use std::process::ExitCode;

use camholm_cli::commands::{cmd_compare, cmd_convergence, cmd_run, cmd_verify, presets};
use camholm_cli::{CliError, CliResult, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "camholm", version, about = "Conservative solutions of two-component Camassa-Holm type systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (flat dotted `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` override, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write frames, diagnostics and metadata.
    Run(Common),
    /// Run the invariant suite at the configured resolution.
    Verify(Common),
    /// Compare against the Eulerian oracle.
    Compare(Common),
    /// Refinement study at N, 2N, 4N, ...
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// List model presets.
    Presets,
}

fn load(c: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(c.config.as_deref(), &c.overrides)?;
    if let Some(out) = &c.out {
        cfg.outputs.directory = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(c) => println!("{}", cmd_run(&load(&c)?)?),
        Command::Verify(c) => {
            let rep = cmd_verify(&load(&c)?)?;
            println!("{rep}");
            if !rep.passed() {
                return Err(CliError::VerifyFailed("see the FAIL lines above".into()));
            }
        }
        Command::Compare(c) => println!("{}", cmd_compare(&load(&c)?)?),
        Command::Convergence { common, levels } => println!("{}", cmd_convergence(&load(&common)?, levels)?),
        Command::Presets => println!("{}", presets()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
