// Trains a small surrogate, checks its gradients and sweeps a tiny grid.
//
// Run with `cargo run --release --example train_surrogate`.

use echoforge::surrogate::{gradient_check, sweep, train};
use echoforge::{Dataset, Envelope, HyperParams, Provenance, SurrogateModel, TurbofanModel};

pub fn run_example() -> echoforge::Result<SurrogateModel> {
    let points = Envelope::default().sample_lhs(2000, 7)?;
    let outputs = TurbofanModel::default().simulate_batch(&points)?;
    let data = Dataset::new(points, outputs, Provenance::Dense, 7)?;
    let (train_set, validation) = data.split(0.8, 1)?;

    let hyper = HyperParams {
        hidden_width: 16,
        depth: 2,
        learning_rate: 1e-3,
        batch_size: 32,
        epochs: 20,
        seed: 3,
    };
    let model = train(&train_set, &validation, &hyper)?;
    let h = model.history();
    println!(
        "train MSE {:.4e} -> {:.4e} over {} epochs",
        h.initial_train_mse, h.final_train_mse, h.epochs
    );
    let deviation = gradient_check(&model, &validation.subsample(16, 0)?);
    println!("gradient check max relative deviation: {deviation:.2e}");

    let grid: Vec<HyperParams> = [8, 16]
        .into_iter()
        .map(|hidden_width| HyperParams { hidden_width, epochs: 5, ..hyper.clone() })
        .collect();
    let outcome = sweep(&train_set, &validation, &grid)?;
    print!("{}", outcome.leaderboard_csv());
    Ok(model)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
