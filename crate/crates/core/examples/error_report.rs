// Scores a surrogate on held-out points and locates its worst errors.
//
// Run with `cargo run --release --example error_report`.

use echoforge::metrics::{boundary_analysis, bucket_report, evaluate, BoundaryReport};
use echoforge::surrogate::train;
use echoforge::{Dataset, Envelope, HyperParams, InputDim, Interval, Provenance, TurbofanModel};

pub fn run_example() -> echoforge::Result<BoundaryReport> {
    let envelope = Envelope::default();
    let model = TurbofanModel::default();
    let dataset = |n, seed| -> echoforge::Result<Dataset> {
        let points = envelope.sample_lhs(n, seed)?;
        let outputs = model.simulate_batch(&points)?;
        Dataset::new(points, outputs, Provenance::Dense, seed)
    };
    let (train_set, validation) = dataset(2000, 1)?.split(0.8, 2)?;
    let test = dataset(1000, 9)?;

    let hyper = HyperParams {
        hidden_width: 16,
        depth: 2,
        learning_rate: 1e-3,
        batch_size: 32,
        epochs: 30,
        seed: 5,
    };
    let surrogate = train(&train_set, &validation, &hyper)?;
    let records = evaluate(&surrogate, &test);
    print!("{}", bucket_report(&records)?.to_table("Held-out accuracy"));

    let mach = envelope.dim_bounds(InputDim::Mach)?;
    let retained = Interval::new(mach.lo, mach.lo + 0.8 * mach.span());
    let boundary = boundary_analysis(&records, &envelope, 1e-2, None, InputDim::Mach, retained)?;
    print!("{}", boundary.summary());
    Ok(boundary)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
