//! Steady-state surrogate: a feedforward network mapping a flight point to
//! the four engine outputs, trained on z-scored data.

mod network;
mod sweep;

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use network::{Adam, Layer, LayerFile, Mlp};
pub use sweep::{default_grid, sweep, LeaderboardEntry, SweepOutcome};

use crate::dataset::{Dataset, NormStats};
use crate::envelope::FlightPoint;
use crate::error::{Error, Result};
use crate::metrics::{relative_error, TIGHT_RE};
use crate::simulator::EngineOutputs;

pub const MODEL_FILE_VERSION: u32 = 1;
pub const N_INPUTS: usize = 4;
pub const N_OUTPUTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub hidden_width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_width == 0 || self.depth == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Contract(format!(
                "hyperparameter counts must be at least 1: {self:?}"
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Contract(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![N_INPUTS];
        sizes.extend(std::iter::repeat_n(self.hidden_width, self.depth));
        sizes.push(N_OUTPUTS);
        sizes
    }
}

/// Held-out accuracy of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationMetric {
    /// Fraction of rows with all four outputs within 0.1% relative error.
    pub within_tight_all: f64,
    /// Mean relative error over rows and outputs.
    pub mean_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub initial_train_mse: f64,
    pub final_train_mse: f64,
    pub epochs: usize,
    pub validation: Option<ValidationMetric>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    net: Mlp,
    stats: NormStats,
    hyper: HyperParams,
    history: TrainingHistory,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    activation: String,
    hyperparams: HyperParams,
    norm_stats: NormStats,
    layers: Vec<LayerFile>,
    history: TrainingHistory,
}

impl SurrogateModel {
    /// Untrained model with seeded uniform weights.
    pub fn initialize(hyper: HyperParams, stats: NormStats) -> Result<Self> {
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        Ok(Self {
            net: Mlp::new(&hyper.layer_sizes(), &mut rng),
            stats,
            history: TrainingHistory {
                initial_train_mse: f64::NAN,
                final_train_mse: f64::NAN,
                epochs: 0,
                validation: None,
            },
            hyper,
        })
    }

    /// Same architecture with every weight and bias zeroed.
    pub fn zeroed(hyper: HyperParams, stats: NormStats) -> Result<Self> {
        let mut m = Self::initialize(hyper, stats)?;
        let n = m.net.n_params();
        m.net.set_flat_params(&vec![0.0; n]);
        Ok(m)
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn norm_stats(&self) -> &NormStats {
        &self.stats
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn output_dim(&self) -> usize {
        self.net.layers.last().map_or(0, Layer::fan_out)
    }

    pub fn predict(&self, p: &FlightPoint) -> EngineOutputs {
        let z = self.net.eval_row(&self.stats.normalize_input(p));
        self.stats.denormalize_output([z[0], z[1], z[2], z[3]])
    }

    pub fn predict_batch(&self, points: &[FlightPoint]) -> Vec<EngineOutputs> {
        points.par_iter().map(|p| self.predict(p)).collect()
    }

    pub fn validation_metric(&self, d: &Dataset) -> Option<ValidationMetric> {
        if d.is_empty() {
            return None;
        }
        let (mut hits, mut total_re) = (0usize, 0.0);
        for (p, t) in d.rows() {
            let re = relative_error(&self.predict(p), t);
            if re.iter().all(|&e| e <= TIGHT_RE) {
                hits += 1;
            }
            total_re += re.iter().sum::<f64>();
        }
        let n = d.len() as f64;
        Some(ValidationMetric {
            within_tight_all: hits as f64 / n,
            mean_re: total_re / (4.0 * n),
        })
    }

    /// Mean squared error in normalized output space and its gradient,
    /// flattened in [`Mlp::flat_params`] order.
    pub fn loss_gradient(&self, sample: &Dataset) -> (f64, Vec<f64>) {
        let (x, t) = normalized_arrays(sample, &self.stats);
        let (loss, grads) = self.net.loss_and_grad(x.view(), t.view());
        (loss, network::flatten(&grads))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            activation: "tanh".into(),
            hyperparams: self.hyper.clone(),
            norm_stats: self.stats,
            layers: self.net.layers.iter().map(Layer::to_file).collect(),
            history: self.history.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Contract(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        if file.activation != "tanh" {
            return Err(Error::Contract(format!(
                "unsupported activation `{}`",
                file.activation
            )));
        }
        let layers = file
            .layers
            .iter()
            .map(Layer::from_file)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Contract("ragged weight matrix".into()))?;
        let expected = file.hyperparams.layer_sizes();
        let sizes: Vec<usize> = layers
            .first()
            .map(Layer::fan_in)
            .into_iter()
            .chain(layers.iter().map(Layer::fan_out))
            .collect();
        if sizes != expected {
            return Err(Error::Contract(format!(
                "layer sizes {sizes:?} do not match hyperparameters {expected:?}"
            )));
        }
        Ok(Self {
            net: Mlp { layers },
            stats: file.norm_stats,
            hyper: file.hyperparams,
            history: file.history,
        })
    }
}

fn normalized_arrays(d: &Dataset, stats: &NormStats) -> (Array2<f64>, Array2<f64>) {
    let n = d.len();
    let mut x = Array2::zeros((n, N_INPUTS));
    let mut t = Array2::zeros((n, N_OUTPUTS));
    for (r, (p, y)) in d.rows().enumerate() {
        for (k, v) in stats.normalize_input(p).into_iter().enumerate() {
            x[[r, k]] = v;
        }
        for (k, v) in stats.normalize_output(y).into_iter().enumerate() {
            t[[r, k]] = v;
        }
    }
    (x, t)
}

/// Trains with mini-batch Adam on z-scored data for a fixed number of epochs.
///
/// Single-threaded; the result depends only on the data and `hyper`.
pub fn train(train: &Dataset, validation: &Dataset, hyper: &HyperParams) -> Result<SurrogateModel> {
    if train.is_empty() {
        return Err(Error::Contract("training set is empty".into()));
    }
    let stats = train.normalization_stats()?;
    let mut model = SurrogateModel::initialize(hyper.clone(), stats)?;
    let (x, t) = normalized_arrays(train, &stats);
    let n = train.len();
    let batch = hyper.batch_size.min(n);

    let initial = model.net.loss(x.view(), t.view());
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut adam = Adam::new(&model.net, hyper.learning_rate);
    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = Array2::zeros((batch, N_INPUTS));
    let mut tb = Array2::zeros((batch, N_OUTPUTS));

    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            if chunk.len() != batch {
                // Short final batch.
                xb = Array2::zeros((chunk.len(), N_INPUTS));
                tb = Array2::zeros((chunk.len(), N_OUTPUTS));
            }
            gather(&x, &t, chunk, &mut xb, &mut tb);
            let (loss, grads) = model.net.loss_and_grad(xb.view(), tb.view());
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut model.net, &grads);
        }
        if xb.nrows() != batch {
            xb = Array2::zeros((batch, N_INPUTS));
            tb = Array2::zeros((batch, N_OUTPUTS));
        }
        if !(epoch_loss / n as f64).is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }

    let final_mse = model.net.loss(x.view(), t.view());
    if !final_mse.is_finite() {
        return Err(Error::Divergence {
            epoch: hyper.epochs,
        });
    }
    model.history = TrainingHistory {
        initial_train_mse: initial,
        final_train_mse: final_mse,
        epochs: hyper.epochs,
        validation: None,
    };
    model.history.validation = model.validation_metric(validation);
    Ok(model)
}

fn gather(
    x: &Array2<f64>,
    t: &Array2<f64>,
    rows: &[usize],
    xb: &mut Array2<f64>,
    tb: &mut Array2<f64>,
) {
    for (b, &r) in rows.iter().enumerate() {
        xb.row_mut(b).assign(&x.row(r));
        tb.row_mut(b).assign(&t.row(r));
    }
}

/// Largest relative deviation between analytic gradients and central finite
/// differences (parameter step `1e-5`) of the normalized-space loss on
/// `sample`.
///
/// Deviation per parameter is `|a - f| / max(|a|, |f|, GRAD_FLOOR)`.
pub fn gradient_check(model: &SurrogateModel, sample: &Dataset) -> f64 {
    const STEP: f64 = 1e-5;
    let (x, t) = normalized_arrays(sample, &model.stats);
    gradient_deviation(&model.net, x.view(), t.view(), STEP)
}

/// Magnitude below which gradients are compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-6;

fn gradient_deviation(net: &Mlp, x: ArrayView2<f64>, t: ArrayView2<f64>, step: f64) -> f64 {
    let (_, grads) = net.loss_and_grad(x, t);
    let analytic = network::flatten(&grads);
    let base = net.flat_params();
    let mut probe = net.clone();
    let mut params = base.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        params[i] = base[i] + step;
        probe.set_flat_params(&params);
        let up = probe.loss(x, t);
        params[i] = base[i] - step;
        probe.set_flat_params(&params);
        let down = probe.loss(x, t);
        params[i] = base[i];
        let fd = (up - down) / (2.0 * step);
        let dev = (a - fd).abs() / a.abs().max(fd.abs()).max(GRAD_FLOOR);
        worst = worst.max(dev);
    }
    worst
}
