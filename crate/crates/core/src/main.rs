use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gclab::lab::{self, Experiment, ExperimentConfig, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "gclab", version, about = "Sequential group composition lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for run artifacts (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for the run (and the only seed of a sweep).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Group axioms, irrep table and harmonic identities.
    Validate(Common),
    /// Acquisition order, scores, plateau levels and widths.
    Predict(Common),
    /// Build and verify an explicit solution.
    Construct(Common),
    /// One seeded training run.
    Train(Common),
    /// Width sweep over group orders.
    PhaseDiagram(Common),
    /// Acquisition gap between 1D and higher-dimensional classes across k.
    BiasSweep(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    let (experiment, args) = match cli.command {
        Command::Validate(a) => (Experiment::Validate, a),
        Command::Predict(a) => (Experiment::Predict, a),
        Command::Construct(a) => (Experiment::Construct, a),
        Command::Train(a) => (Experiment::Train, a),
        Command::PhaseDiagram(a) => (Experiment::PhaseDiagram, a),
        Command::BiasSweep(a) => (Experiment::BiasSweep, a),
    };
    let result = ExperimentConfig::load(&args.config)
        .and_then(|c| c.resolve(experiment, args.out, args.seed))
        .and_then(|c| lab::run(experiment, &c));
    match result {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report serializes"));
            eprintln!("{}", outcome.summary);
            ExitCode::from(if outcome.passed { EXIT_OK } else { EXIT_CHECK_FAILED } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
