use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaybeam::config::parse_config;
use relaybeam::report::{campaign_csv, samples_csv};
use relaybeam::sim::{preset_fig2, preset_fig3, run_campaign, ExperimentConfig};
use relaybeam::validate;

#[derive(Parser)]
#[command(
    name = "relaybeam",
    version,
    about = "Monte-Carlo simulator for two-phase zero-forcing beamforming in multi-relay MIMO-OFDMA downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by a config file
    Run {
        /// Path to a flat `section.key = value` config file
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Preset: optimality gap and group counts over the alpha sweep
    Fig2 {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Preset: capacity under BS and RN power sweeps
    Fig3 {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the built-in invariant checks and report pass/fail
    Validate,
}

#[derive(Args)]
struct Overrides {
    /// Monte-Carlo samples per sweep point
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed for the campaign
    #[arg(long)]
    seed: Option<u64>,
    /// Write the campaign CSV to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-sample CSV to this file
    #[arg(long)]
    per_sample: Option<PathBuf>,
    /// Worker thread count (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn apply_overrides(config: &mut ExperimentConfig, overrides: &Overrides) {
    if let Some(samples) = overrides.samples {
        config.num_samples = samples;
    }
    if let Some(seed) = overrides.seed {
        config.master_seed = seed;
    }
}

fn execute(mut config: ExperimentConfig, overrides: &Overrides) -> ExitCode {
    apply_overrides(&mut config, overrides);
    if let Some(threads) = overrides.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: unable to configure {threads} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let summary = match run_campaign(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let csv = campaign_csv(&summary);
    match &overrides.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &overrides.per_sample {
        if let Err(e) = std::fs::write(path, samples_csv(&summary)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}

fn run_validate() -> ExitCode {
    let results = validate::run_all();
    let mut passed = 0;
    let mut failed = 0;
    for check in &results {
        match &check.outcome {
            Ok(()) => {
                passed += 1;
                println!("ok      {}", check.name);
            }
            Err(e) => {
                failed += 1;
                println!("FAILED  {}: {e}", check.name);
            }
        }
    }
    println!("{passed} passed, {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match parse_config(&text) {
                Ok(parsed) => execute(parsed, &overrides),
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    ExitCode::from(2)
                }
            }
        }
        Command::Fig2 { overrides } => execute(preset_fig2(), &overrides),
        Command::Fig3 { overrides } => execute(preset_fig3(), &overrides),
        Command::Validate => run_validate(),
    }
}
