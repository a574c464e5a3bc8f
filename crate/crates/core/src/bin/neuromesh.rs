use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neuromesh::harness::{
    run_file, run_selftest, seed_from_env, sweep_file, CheckStatus, HarnessError, RunOptions,
    RunReport, SelftestOptions, SCHEMA,
};

#[derive(Parser)]
#[command(name = "neuromesh", version, about = "Decentralized multi-agent inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV results.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reduced acceptance checks.
    Selftest {
        /// Directory with trained weights for the learned-policy checks.
        #[arg(long)]
        weights_dir: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_wire: bool,
    },
    /// Run the `[sweep]` grid of a scenario.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the annotated scenario schema.
    PrintSchema,
}

fn options(out: Option<PathBuf>) -> Result<RunOptions, HarnessError> {
    Ok(RunOptions {
        output_dir: out,
        seed_override: seed_from_env()?,
    })
}

fn report(r: Result<RunReport, HarnessError>) -> ExitCode {
    match r {
        Ok(r) => {
            for line in &r.summary {
                println!("{line}");
            }
            for p in &r.outputs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", r.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => report(options(out).and_then(|o| run_file(&config, &o))),
        Command::Sweep { config, out } => report(options(out).and_then(|o| sweep_file(&config, &o))),
        Command::PrintSchema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Selftest {
            weights_dir,
            corrupt_wire,
        } => {
            let results = run_selftest(&SelftestOptions {
                corrupt_wire_magic: corrupt_wire,
                weights_dir,
            });
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| r.status == CheckStatus::Fail).count();
            println!("{} checks, {failed} failed", results.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
