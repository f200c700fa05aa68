use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tvp_cli::{commands, RunArgs};

#[derive(Parser)]
#[command(
    name = "tvp",
    version,
    about = "Shrinkage for time-varying parameter regressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic series and their true parameters.
    Simulate(Common),
    /// Run the Gibbs sampler on a CSV data set.
    Fit(Common),
    /// Rolling one-step-ahead log predictive density scores.
    Forecast {
        #[command(flatten)]
        common: Common,
        /// Training sample size; overrides `forecast.t0`.
        #[arg(long)]
        t0: Option<usize>,
    },
    /// Repeated simulate-and-fit under each configured prior.
    Simstudy(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn into_args(self, t0: Option<usize>) -> RunArgs {
        RunArgs {
            config: self.config,
            data: self.data,
            out: self.out,
            seed: self.seed,
            threads: self.threads,
            t0,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (run, args): (fn(&RunArgs) -> Result<()>, RunArgs) = match cli.command {
        Command::Simulate(c) => (commands::simulate, c.into_args(None)),
        Command::Fit(c) => (commands::fit, c.into_args(None)),
        Command::Forecast { common, t0 } => (commands::forecast, common.into_args(t0)),
        Command::Simstudy(c) => (commands::simstudy, c.into_args(None)),
    };
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot start the thread pool")?;
    }
    run(&args)
}
