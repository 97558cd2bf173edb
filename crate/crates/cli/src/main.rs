//! `mslevy`: simulation campaigns, CF tables, decompositions and checks for
//! multistable Lévy motions.
//!
//! Exit codes: 0 success, 1 check failure or runtime error, 2 usage or config error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CfProcess, RuleArg, Run};
use config::CampaignConfig;

#[derive(Debug, Parser)]
#[command(name = "mslevy", version, about = "Multistable Lévy motion campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Campaign config, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    /// Replaces the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` and $MSLEVY_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate `n_paths` trajectories into paths.csv.
    Simulate(Common),
    /// Evaluate the joint characteristic function at each query row.
    Cf {
        #[command(flatten)]
        common: Common,
        /// CSV with header `times,thetas`, space-separated lists per field.
        #[arg(long)]
        queries: PathBuf,
        /// Which process to evaluate; defaults to the config's process.
        #[arg(long, value_enum)]
        process: Option<CfProcess>,
    },
    /// Split paths into a finite-variation part and a martingale part.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
    },
    /// Tangency check at the `[localize]` base time and scales.
    Localize(Common),
    /// Run the full check suite.
    Check(Common),
}

pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn setup(c: &Common) -> Result<Run, Failure> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(anyhow::anyhow!("--threads: {e}")))?;
    }
    let mut cfg = CampaignConfig::load(&c.config).map_err(Failure::Usage)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Run::new(cfg, c.out.as_deref())
}

fn verdict(pass: bool, what: &str, dir: &Path) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("{what} did not pass; see {}", dir.display());
        ExitCode::from(1)
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Simulate(c) => commands::simulate(&setup(&c)?).map(|_| ExitCode::SUCCESS),
        Command::Cf {
            common,
            queries,
            process,
        } => commands::cf(&setup(&common)?, &queries, process).map(|_| ExitCode::SUCCESS),
        Command::Decompose { common, rule } => commands::decompose(&setup(&common)?, rule).map(|_| ExitCode::SUCCESS),
        Command::Localize(c) => {
            let run = setup(&c)?;
            commands::localize(&run).map(|p| verdict(p, "tangency check", &run.dir))
        }
        Command::Check(c) => {
            let run = setup(&c)?;
            commands::check(&run).map(|p| verdict(p, "check suite", &run.dir))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
