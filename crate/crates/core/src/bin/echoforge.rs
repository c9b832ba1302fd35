use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use echoforge::config::{PipelineConfig, PreAlMode};
use echoforge::pipeline::{Pipeline, Stage};

#[derive(Parser)]
#[command(name = "echoforge", version, about = "Turbofan surrogate pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw dense and test flight points.
    Sample(Common),
    /// Run the engine model on the sampled points.
    Simulate(Common),
    /// Rebalance the dense set in output space.
    Downsample(Common),
    /// Sweep hyperparameters on the baseline and downsampled sets.
    Train(Common),
    /// Score both models on the test set.
    Evaluate(Common),
    /// Write accuracy, boundary and comparison reports.
    Report(Common),
    /// Run every stage in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML). Defaults to the shipped configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "ECHOFORGE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Derive every seed from this value instead of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Training set for the baseline model.
    #[arg(long, value_enum)]
    pre_al_mode: Option<PreAlMode>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = match cli.command {
        Command::Sample(c) => (Some(Stage::Sample), c),
        Command::Simulate(c) => (Some(Stage::Simulate), c),
        Command::Downsample(c) => (Some(Stage::Downsample), c),
        Command::Train(c) => (Some(Stage::Train), c),
        Command::Evaluate(c) => (Some(Stage::Evaluate), c),
        Command::Report(c) => (Some(Stage::Report), c),
        Command::Pipeline(c) => (None, c),
    };
    let pipeline = match build(common) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: config: {e}");
            return ExitCode::from(Stage::Config.exit_code() as u8);
        }
    };
    let result = match stage {
        Some(s) => pipeline.run_stage(s),
        None => pipeline.run().map(|report| {
            print!(
                "{}",
                std::fs::read_to_string(pipeline.out_dir().join("summary.txt"))
                    .unwrap_or_default()
            );
            drop(report);
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}

fn build(c: Common) -> echoforge::Result<Pipeline> {
    let mut config = match &c.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::shipped_default(),
    };
    if let Some(seed) = c.seed {
        config.override_seeds(seed);
    }
    if let Some(mode) = c.pre_al_mode {
        config.pre_al_mode = mode;
    }
    if let Some(out) = c.out {
        config.output_dir = out;
    }
    let out = config.output_dir.clone();
    Pipeline::new(config, out, c.threads)
}
