use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nlfb_cli::config::Experiment;
use nlfb_cli::{run_app, Overrides};

#[derive(Parser)]
#[command(
    name = "nlfb",
    version,
    about = "Nonlocal one-phase free boundary laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the functional and its perimeter terms
    Energy(Common),
    /// Extend a trace into the half-cylinder
    Extend(Common),
    /// Solve constrained replacements and measure energy increments
    Replace(Common),
    /// Slicewise symmetric rearrangement of random fields
    Rearrange(Common),
    /// Minimize the functional over pairs
    Minimize(Common),
    /// Density profile of a minimizer
    Density(Common),
    /// Growth exponent near the free boundary
    Growth(Common),
    /// Run the property suite
    Verify {
        #[command(flatten)]
        common: Common,
        /// Reduced sizes
        #[arg(long)]
        quick: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let (experiment, common, quick) = match cli.command {
        Command::Energy(c) => (Experiment::Energy, c, false),
        Command::Extend(c) => (Experiment::Extend, c, false),
        Command::Replace(c) => (Experiment::Replace, c, false),
        Command::Rearrange(c) => (Experiment::Rearrange, c, false),
        Command::Minimize(c) => (Experiment::Minimize, c, false),
        Command::Density(c) => (Experiment::Density, c, false),
        Command::Growth(c) => (Experiment::Growth, c, false),
        Command::Verify { common, quick } => (Experiment::Verify, common, quick),
    };
    let overrides = Overrides {
        config: common.config,
        seed: common.seed,
        out: common.out,
        quick,
    };
    std::process::exit(run_app(experiment, &overrides));
}
