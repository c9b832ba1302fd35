// Runs every stage on the minimal configuration and prints the summary.
//
// Run with `cargo run --release --example full_pipeline [CONFIG.toml]`.
// The shipped full-scale configuration is `configs/default.toml`.

use echoforge::config::PipelineConfig;
use echoforge::pipeline::{Pipeline, PipelineReport};

pub fn run_example() -> echoforge::Result<PipelineReport> {
    let config = match std::env::args().nth(1).filter(|a| a.ends_with(".toml")) {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::minimal(),
    };
    let out = std::env::temp_dir()
        .join("echoforge-example")
        .join(&config.output_dir);
    let pipeline = Pipeline::new(config, &out, 0)?;
    let report = pipeline.run().map_err(|e| e.source)?;
    print!("{}", report.pre.to_table("Baseline"));
    print!("{}", report.post.to_table("Downsampled"));
    print!("{}", report.boundary.summary());
    println!("artifacts in {}", out.display());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
