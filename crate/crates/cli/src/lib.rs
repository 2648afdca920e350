//! Command-line front end for `isac-mrp`.
//!
//! Every command is a pure function of the configuration and seed. Each run
//! writes its artifacts plus a `manifest.json` into the output directory;
//! passing that manifest back as `--config` repeats the run.

pub mod commands;
pub mod reproduce;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{run, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "isac-mrp",
    version,
    about = "Multi-RP monostatic background channel simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML) or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Monte Carlo realizations; overrides the configuration.
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Weight sub-channels by their shadow fading as well as path loss.
    #[arg(long, global = true)]
    pub include_sf: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate channel realizations for one placement.
    Simulate {
        /// Evenly spaced placement of Q RPs meeting the PL target, instead
        /// of the configured one.
        #[arg(long, value_name = "Q")]
        average: Option<usize>,
        /// Skip the per-realization path dumps.
        #[arg(long)]
        no_paths: bool,
    },
    /// Search for the RP count and placement that best match the targets.
    Optimize {
        /// Targets file (TOML with pl_db, ds_s, as_az_deg[, as_zen_deg]);
        /// defaults to the configured targets.
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// PL, DS and AS of a path-list CSV (delay_ns,aod_deg,zod_deg,power_db).
    Stats { csv: PathBuf },
    /// Canned reproduction runs.
    Reproduce {
        #[arg(value_enum)]
        target: ReproduceTarget,
    },
    /// Draw a synthetic measured path list.
    SynthMeasure {
        #[arg(long, default_value_t = 302)]
        count: usize,
        /// Total path gain [dB].
        #[arg(long, allow_hyphen_values = true, default_value_t = -80.8125)]
        pl: f64,
        /// Output file; defaults to `<out>/measurement.csv`.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproduceTarget {
    /// Equal RP distances meeting the PL target for Q = 1..5.
    Distances,
    /// Mean DS/AS of the optimized and evenly spaced placements.
    Sweep,
    /// log10 DS/AS samples and normal fits of three placements.
    Cdf,
}
