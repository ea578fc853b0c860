use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use cutlab_cli::config::WORKERS_ENV;
use cutlab_cli::{run_experiment_with_cancel, validate_config_with, Kind, Overrides};

#[derive(Parser)]
#[command(name = "cutlab", version, about = "Monte Carlo experiments on cut points of random walks and Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory; must not exist.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per scale; overrides the config.
    #[arg(long)]
    trials: Option<u64>,
    /// Only validate the config and print it.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Non-intersection probabilities and the intersection exponent.
    Xi(Common),
    /// One-point cut-point function.
    Onepoint(Common),
    /// Two-point cut-point function and its decay profile.
    Twopoint(Common),
    /// Moments of the number of cut points.
    Moments(Common),
    /// Brownian cut-ball probabilities and grid measures.
    Cutball(Common),
    /// Coupling deviations and cut-ball agreement.
    Couple(Common),
    /// Coupled box masses of the walk and Brownian measures.
    L2box(Common),
    /// Box-counting dimension of the cut set.
    Boxdim(Common),
    /// Gambler's-ruin hitting probabilities against their closed forms.
    Ruin(Common),
    /// Escape probabilities past a ray.
    Beurling(Common),
}

impl Command {
    fn parts(&self) -> (Kind, &Common) {
        match self {
            Command::Xi(c) => (Kind::Xi, c),
            Command::Onepoint(c) => (Kind::OnePoint, c),
            Command::Twopoint(c) => (Kind::TwoPoint, c),
            Command::Moments(c) => (Kind::Moments, c),
            Command::Cutball(c) => (Kind::Cutball, c),
            Command::Couple(c) => (Kind::Couple, c),
            Command::L2box(c) => (Kind::L2box, c),
            Command::Boxdim(c) => (Kind::Dimension, c),
            Command::Ruin(c) => (Kind::Ruin, c),
            Command::Beurling(c) => (Kind::Beurling, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = cli.command.parts();
    let raw = match std::fs::read_to_string(&common.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    let over = Overrides {
        kind: Some(kind),
        seed: common.seed,
        workers: common.workers,
        out: common.out.clone(),
        trials: common.trials,
    };
    let cfg = match validate_config_with(&raw, &over) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    if common.check {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("serializable"));
        return ExitCode::SUCCESS;
    }

    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        eprintln!("warning: cannot install interrupt handler: {e}");
    }
    match run_experiment_with_cancel(&cfg, Some(cancel)) {
        Ok(m) => {
            println!("wrote {} ({} files, {:.1} s)", cfg.out.display(), m.files.len(), m.wall_time_s);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
