use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edgeflow::commands::{converge_cmd, restore_cmd, sweep_cmd, verify_cmd, Outcome, RunOptions};
use edgeflow::{AppResult, Config};

#[derive(Parser)]
#[command(name = "edgeflow", version, about = "Edge-preserving diffusion: restoration and verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise an image and write restored image, diagnostics and manifest
    Restore(Common),
    /// Check the energy, Phi, dissipative and Gronwall estimates on a scenario
    Verify(Common),
    /// Restore over a parameter grid, one summary row per cell
    Sweep(Common),
    /// Refinement orders and the epsilon -> 0 table
    Converge(Common),
}

#[derive(Args)]
struct Common {
    /// Config file, or a manifest.json to replay
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides input.seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn dispatch(f: fn(&Config, &RunOptions) -> AppResult<Outcome>, args: &Common) -> AppResult<Outcome> {
    let cfg = Config::load(&args.config)?;
    f(&cfg, &RunOptions { out: args.out.clone(), seed: args.seed })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (f, args): (fn(&Config, &RunOptions) -> AppResult<Outcome>, &Common) = match &cli.command {
        Command::Restore(a) => (restore_cmd, a),
        Command::Verify(a) => (verify_cmd, a),
        Command::Sweep(a) => (sweep_cmd, a),
        Command::Converge(a) => (converge_cmd, a),
    };
    match dispatch(f, args) {
        Ok(outcome) => {
            if !args.quiet {
                for line in &outcome.lines {
                    println!("{line}");
                }
                println!("wrote {}", args.out.join("manifest.json").display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
