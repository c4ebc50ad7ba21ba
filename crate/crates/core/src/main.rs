use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thzsim::cli::{self, ExperimentKind};
use thzsim::InterferenceMode;

#[derive(Parser)]
#[command(
    name = "thzsim",
    version,
    about = "Leaky-wave antenna THz network experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic average rate and its lower bound.
    RateAnalytic(RunArgs),
    /// Monte Carlo average rate.
    RateMc(RunArgs),
    /// Analytic, lower bound and Monte Carlo side by side.
    RateCompare(RunArgs),
    /// Subchannel plan for one link.
    Allocate(RunArgs),
    /// Proposed vs equal allocation over random links.
    AllocateCompare(RunArgs),
    /// Optimal vs max-power energy efficiency over random links.
    PowerEe(RunArgs),
    /// Rate, allocation and power experiments along one axis.
    Sweep(RunArgs),
    /// Run the kind named in the config.
    Run(RunArgs),
    /// Print the config back in canonical form.
    ShowConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// windowed, full or off.
    #[arg(long)]
    mode: Option<InterferenceMode>,
}

fn execute(kind: Option<ExperimentKind>, args: RunArgs) -> thzsim::Result<()> {
    let mut spec = cli::load_config(&args.config)?;
    if kind.is_some() {
        spec.experiment.kind = kind;
    }
    if let Some(out) = args.out {
        spec.experiment.out = Some(out.display().to_string());
    }
    if let Some(seed) = args.seed {
        spec.experiment.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.experiment.trials = trials;
    }
    if let Some(mode) = args.mode {
        spec.network.mode = mode;
    }
    for path in cli::run(&spec)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::RateAnalytic(a) => execute(Some(ExperimentKind::RateAnalytic), a),
        Command::RateMc(a) => execute(Some(ExperimentKind::RateMc), a),
        Command::RateCompare(a) => execute(Some(ExperimentKind::RateCompare), a),
        Command::Allocate(a) => execute(Some(ExperimentKind::Allocate), a),
        Command::AllocateCompare(a) => execute(Some(ExperimentKind::AllocateCompare), a),
        Command::PowerEe(a) => execute(Some(ExperimentKind::PowerEe), a),
        Command::Sweep(a) => execute(Some(ExperimentKind::Sweep), a),
        Command::Run(a) => execute(None, a),
        Command::ShowConfig { config } => {
            cli::load_config(&config).map(|spec| print!("{}", cli::write_config(&spec)))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
