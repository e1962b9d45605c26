use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rwre::config::Config;
use rwre::experiments::{exit_code, run_command, Command, ExperimentConfig, Overrides};
use rwre::report::{jsonl_path, write_csv, write_files};

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "kebab-case")]
enum Sub {
    Push,
    TiltCheck,
    Capacity,
    Conductance,
    Bottleneck,
    Tube,
    Rate,
    Survivors,
    #[value(name = "smallprob")]
    SmallProb,
    Harnack,
    Phase,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Push => Command::Push,
            Sub::TiltCheck => Command::TiltCheck,
            Sub::Capacity => Command::Capacity,
            Sub::Conductance => Command::Conductance,
            Sub::Bottleneck => Command::Bottleneck,
            Sub::Tube => Command::Tube,
            Sub::Rate => Command::Rate,
            Sub::Survivors => Command::Survivors,
            Sub::SmallProb => Command::SmallProb,
            Sub::Harnack => Command::Harnack,
            Sub::Phase => Command::Phase,
        }
    }
}

/// Random walks in random environments on trees: desk-scale experiments.
#[derive(Parser)]
#[command(name = "rwre", version)]
struct Cli {
    /// Experiment to run.
    experiment: Sub,
    /// Experiment config (key = value lines under [section] headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// File holding a [distribution] block; overrides the config's.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// CSV output path; a .jsonl mirror is written next to it. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Largest tree level that may be materialized.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    c_list: Option<String>,
    #[arg(long)]
    n_list: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match go(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rwre: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn go(cli: Cli) -> rwre::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rwre::Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::from_config(Config::default())?,
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        budget: cli.budget,
        out: cli.out.clone(),
        dist_file: cli.dist.clone(),
        c_list: cli.c_list.clone(),
        n_list: cli.n_list.clone(),
    })?;
    let rows = run_command(cli.experiment.into(), &cfg)?;
    match &cfg.out {
        Some(path) => {
            write_files(&rows, path)?;
            eprintln!("wrote {} rows to {} and {}", rows.len(), path.display(), jsonl_path(path).display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&rows, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
