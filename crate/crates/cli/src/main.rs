use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rpwno_cli::config::RunConfig;
use rpwno_cli::{cmd_eval, cmd_generate, cmd_sweep_beta, cmd_sweep_tds, cmd_train};

/// Wavelet neural operator ensembles with randomized priors: data
/// generation, training, evaluation, and sweep experiments.
#[derive(Parser)]
#[command(name = "rpwno", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test dataset files.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train the ensemble and write checkpoint plus loss curves.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train members concurrently (default; results are identical
        /// either way).
        #[arg(long, conflicts_with = "serial")]
        parallel: bool,
        /// Train members one at a time.
        #[arg(long)]
        serial: bool,
    },
    /// Evaluate a checkpoint on the test dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Probe locations for density curves, e.g. "x=0.14;x=0.92".
        #[arg(long)]
        points: Option<String>,
    },
    /// Train one ensemble per training-set size and tabulate the trends.
    SweepTds {
        #[command(flatten)]
        common: Common,
        /// Training-set sizes, e.g. --tds 100,400.
        #[arg(long, value_delimiter = ',')]
        tds: Option<Vec<usize>>,
    },
    /// Train one ensemble per beta with shared seeds and data.
    SweepBeta {
        #[command(flatten)]
        common: Common,
        /// Beta values, e.g. --betas 0.5,1,2,100.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn init_thread_pool() -> Result<()> {
    if let Ok(threads) = std::env::var("RPWNO_THREADS") {
        let threads: usize = threads
            .parse()
            .context("RPWNO_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    init_thread_pool()?;
    match Cli::parse().command {
        Command::Generate { common } => {
            cmd_generate(&load_config(&common)?)?;
        }
        Command::Train {
            common,
            parallel: _,
            serial,
        } => {
            let mut cfg = load_config(&common)?;
            if serial {
                cfg.parallel = false;
            }
            cmd_train(&cfg)?;
        }
        Command::Eval { common, points } => {
            let mut cfg = load_config(&common)?;
            if points.is_some() {
                cfg.points = points;
            }
            cmd_eval(&cfg)?;
        }
        Command::SweepTds { common, tds } => {
            let mut cfg = load_config(&common)?;
            if let Some(tds) = tds {
                cfg.sweep.tds = Some(tds);
            }
            cmd_sweep_tds(&cfg)?;
        }
        Command::SweepBeta { common, betas } => {
            let mut cfg = load_config(&common)?;
            if let Some(betas) = betas {
                cfg.sweep.betas = Some(betas);
            }
            cmd_sweep_beta(&cfg)?;
        }
    }
    Ok(())
}
