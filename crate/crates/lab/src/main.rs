use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaplab::config;
use gaplab::experiments;
use gaplab::fixtures;
use gaplab::{LabError, RunOptions};

#[derive(Parser)]
#[command(name = "lab", version, about = "Averaging-operator experiments on SU(2) and SL2(R)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its CSV tables and manifests.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Frozen regression runs.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
        /// Fixture directory holding manifest.json.
        #[arg(long, default_value = "fixtures", global = true)]
        dir: PathBuf,
        #[arg(long, global = true)]
        threads: Option<usize>,
        /// Restrict to these fixture names.
        #[arg(long = "only", global = true)]
        only: Vec<String>,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum FixtureAction {
    /// Re-run and diff against the frozen tables.
    Check,
    /// Overwrite the frozen tables.
    Freeze,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            threads,
        } => {
            let loaded = config::load(&config)?;
            let s = experiments::run(&loaded, &RunOptions { seed, out, threads })?;
            for f in &s.files {
                println!("{}", f.display());
            }
            println!("{}", s.manifest.display());
        }
        Command::Validate { config } => {
            let loaded = config::load(&config)?;
            println!("ok: {} ({})", loaded.config.experiment.name(), loaded.hash);
        }
        Command::Fixtures {
            action,
            dir,
            threads,
            only,
        } => {
            let threads = threads.unwrap_or_else(rayon_default);
            match action {
                FixtureAction::Check => {
                    let outcomes = fixtures::check(&dir, threads, &only)?;
                    let mut failed = 0;
                    for o in &outcomes {
                        if o.passed() {
                            println!("ok   {} ({} tables)", o.name, o.tables);
                        } else {
                            failed += 1;
                            println!("FAIL {}", o.name);
                            for d in &o.diffs {
                                println!("     {d}");
                            }
                        }
                    }
                    if failed > 0 {
                        return Err(LabError::Mismatch(format!("{failed} of {} fixtures differ", outcomes.len())));
                    }
                }
                FixtureAction::Freeze => {
                    for p in fixtures::freeze(&dir, threads, &only)? {
                        println!("{}", p.display());
                    }
                }
            }
        }
    }
    Ok(())
}

fn rayon_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
