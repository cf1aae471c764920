//! `roomrisk` command-line interface.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roomrisk_core::stats::{Scale, TTestVariant};
use roomrisk_core::synthetic::TrafficProfile;
use roomrisk_core::AreaUnit;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "roomrisk",
    version,
    about = "Venue-level Wells-Riley infection scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one week of visits and write per-venue results.
    Simulate(SimulateArgs),
    /// Run two scenarios over the same venues and test the difference.
    Compare(CompareArgs),
    /// Rank venues from a results file by expected weekly infections.
    Hotspots(HotspotsArgs),
    /// Write a seeded synthetic venue file and visit file.
    GenSynthetic(GenSyntheticArgs),
}

/// Inputs shared by `simulate` and `compare`.
#[derive(Args)]
pub struct InputArgs {
    /// Venue file (venue_id,name,category,area).
    #[arg(long)]
    pub venues: PathBuf,
    /// Baseline visit file (venue_id,hour,count).
    #[arg(long)]
    pub visits: PathBuf,
    /// Params file (key = value); flags below take precedence.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Unit of the venue file's area column.
    #[arg(long, default_value = "m2")]
    pub area_unit: AreaUnit,
    /// Documented prevalence; required unless the params file sets it.
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Multiplier from documented to effective prevalence [default: 15].
    #[arg(long)]
    pub underreport_factor: Option<f64>,
    /// Simulation window length in hours.
    #[arg(long, default_value_t = roomrisk_core::ingest::WEEK_HOURS)]
    pub window_hours: usize,
    /// Histogram bin count.
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    /// Histogram scale: linear or log10 (zeros are excluded and counted).
    #[arg(long, default_value = "log10")]
    pub scale: Scale,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Target panel-to-population factor for visit counts.
    #[arg(long, default_value_t = 10.0)]
    pub sampling_factor: f64,
    /// Physical-distancing spacing with unit, e.g. 6ft or 1.8m.
    #[arg(long)]
    pub spacing: Option<String>,
    /// Weekly expected infections above which a venue is severe.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    /// Scenario label written into the reports.
    #[arg(long, default_value = "baseline")]
    pub name: String,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scenario config for the first distribution.
    #[arg(long)]
    pub scenario_a: PathBuf,
    /// Scenario config for the second distribution.
    #[arg(long)]
    pub scenario_b: PathBuf,
    /// Use the pooled-variance t-test instead of Welch's.
    #[arg(long)]
    pub pooled: bool,
}

impl CompareArgs {
    pub fn variant(&self) -> TTestVariant {
        if self.pooled {
            TTestVariant::Pooled
        } else {
            TTestVariant::Welch
        }
    }
}

#[derive(Args)]
pub struct HotspotsArgs {
    /// results.csv written by `simulate` or `compare`.
    #[arg(long)]
    pub results: PathBuf,
    /// Weekly expected infections above which a venue is severe.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    /// Only print the first K venues.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Args)]
pub struct GenSyntheticArgs {
    /// Number of venues.
    #[arg(long, default_value_t = 1034)]
    pub n_venues: usize,
    /// lockdown or pre_pandemic.
    #[arg(long, default_value = "lockdown")]
    pub profile: TrafficProfile,
    /// Generator seed.
    #[arg(long, default_value_t = 2020)]
    pub seed: u64,
    /// Traffic multiplier of the pre_pandemic profile relative to lockdown.
    #[arg(long)]
    pub pre_pandemic_multiplier: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result: Result<(), CliError> = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Compare(args) => commands::compare(&args),
        Command::Hotspots(args) => commands::hotspots(&args),
        Command::GenSynthetic(args) => commands::gen_synthetic(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
