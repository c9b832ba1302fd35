// Rebalances a dense dataset toward a uniform output distribution.
//
// Run with `cargo run --release --example downsample_outputs`.

use echoforge::active_learning::{downsample, DownsampleReport};
use echoforge::{Dataset, Envelope, Provenance, TurbofanModel};

pub fn run_example() -> echoforge::Result<DownsampleReport> {
    let n = 5000;
    let points = Envelope::default().sample_lhs(n, 1)?;
    let outputs = TurbofanModel::default().simulate_batch(&points)?;
    let dense = Dataset::new(points, outputs, Provenance::Dense, 1)?;

    let (down, report) = downsample(&dense, n, 4)?;
    println!(
        "{} dense rows, {} candidates -> {} unique rows",
        dense.len(),
        report.candidates,
        down.len()
    );
    println!("{:<20}{:>10}{:>10}", "output", "KS before", "KS after");
    for d in echoforge::OutputDim::ALL {
        let k = d.index();
        println!("{:<20}{:>10.4}{:>10.4}", d.name(), report.ks_pre[k], report.ks_post[k]);
    }
    println!("most skewed: {}", report.most_skewed().name());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
