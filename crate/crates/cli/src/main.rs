//! `pqc`: build, certify and run counting experiments on representations of
//! free groups preserving a form of signature `(p,q)`.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pqcartan::freegroup::DEFAULT_WORD_CAP;

use crate::commands::Ctx;
use crate::error::CliError;
use crate::output::{Manifest, Output};

#[derive(Parser)]
#[command(
    name = "pqc",
    version,
    about = "(p,q)-Cartan projections and orbit counting for Schottky groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Run config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest number of words an enumeration may visit.
    #[arg(long, global = true)]
    max_words: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Print errors as JSON on stdout.
    #[arg(long, global = true)]
    json_errors: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Representation commands.
    Rep {
        #[command(subcommand)]
        action: RepAction,
    },
    /// Projections of every word in a ball (CSV).
    Enumerate,
    /// Projections of given matrices, words and flags.
    Project,
    /// Numerical check of the cocycle identities.
    CocycleCheck,
    /// Counting functions and exponent fits.
    Count,
    /// Direction clouds of both projections and the Weyl subset.
    Cone,
    /// Box masses of fixed point pairs and the Gromov comparison.
    Equidistribute,
    /// Linear growth of the simple roots along word shells.
    GapCheck,
}

#[derive(Subcommand)]
enum RepAction {
    /// Build and certify.
    Build,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rep {
                action: RepAction::Build,
            } => "rep build",
            Command::Enumerate => "enumerate",
            Command::Project => "project",
            Command::CocycleCheck => "cocycle-check",
            Command::Count => "count",
            Command::Cone => "cone",
            Command::Equidistribute => "equidistribute",
            Command::GapCheck => "gap-check",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let cap = c.max_words.unwrap_or(DEFAULT_WORD_CAP);
    if cap == 0 {
        return Err(CliError::config("--max-words must be positive"));
    }
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let loaded = config::load(path)?;
    let seed = c
        .seed
        .or(loaded.config.seed)
        .unwrap_or(loaded.config.rep.seed);
    let manifest = Manifest {
        tool: "pqc",
        tool_version: env!("CARGO_PKG_VERSION"),
        core_version: pqcartan::VERSION,
        subcommand: cli.command.name().into(),
        config_sha256: loaded.sha256,
        seed,
        max_words: cap,
    };
    let ctx = Ctx {
        config: loaded.config,
        seed,
        cap,
        out: Output::new(&c.out, manifest)?,
    };
    match &cli.command {
        Command::Rep {
            action: RepAction::Build,
        } => commands::rep_build(&ctx),
        Command::Enumerate => commands::enumerate(&ctx),
        Command::Project => commands::project(&ctx),
        Command::CocycleCheck => commands::cocycle_check(&ctx),
        Command::Count => commands::count(&ctx),
        Command::Cone => commands::cone(&ctx),
        Command::Equidistribute => commands::equidistribute(&ctx),
        Command::GapCheck => commands::gap_check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.common.json_errors {
                println!(
                    "{}",
                    serde_json::to_string(&e.body()).expect("error body serializes")
                );
            } else {
                eprintln!("error: {}", e.message);
                if !e.detail.is_null() {
                    eprintln!(
                        "{}",
                        serde_json::to_string_pretty(&e.detail).unwrap_or_default()
                    );
                }
            }
            ExitCode::from(e.exit as u8)
        }
    }
}
