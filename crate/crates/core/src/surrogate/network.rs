use ndarray::{linalg::general_mat_mul, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense layer `y = x · W + b`, `W` stored as `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Serialized form: one weight row per input unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Uniform in `±1/sqrt(fan_in)` for weights and biases.
    pub fn uniform<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (fan_in as f64).sqrt();
        let mut draw = || rng.gen_range(-scale..scale);
        let weights = Array2::from_shape_fn((fan_in, fan_out), |_| draw());
        let bias = Array1::from_shape_fn(fan_out, |_| draw());
        Self { weights, bias }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn to_file(&self) -> LayerFile {
        LayerFile {
            weights: self.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            bias: self.bias.to_vec(),
        }
    }

    pub fn from_file(f: &LayerFile) -> Option<Self> {
        let fan_in = f.weights.len();
        let fan_out = f.bias.len();
        if f.weights.iter().any(|r| r.len() != fan_out) {
            return None;
        }
        let flat: Vec<f64> = f.weights.iter().flatten().copied().collect();
        Some(Self {
            weights: Array2::from_shape_vec((fan_in, fan_out), flat).ok()?,
            bias: Array1::from(f.bias.clone()),
        })
    }
}

/// tanh hidden layers followed by a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Activations kept for the backward pass.
pub struct Trace {
    /// `activations[0]` is the input batch; the last entry is the output.
    pub activations: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        Self {
            layers: sizes
                .windows(2)
                .map(|w| Layer::uniform(w[0], w[1], rng))
                .collect(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &activations[l];
            let mut z = Array2::zeros((prev.nrows(), layer.fan_out()));
            z.assign(&layer.bias);
            general_mat_mul(1.0, prev, &layer.weights, 1.0, &mut z);
            if l < last {
                z.mapv_inplace(f64::tanh);
            }
            activations.push(z);
        }
        Trace { activations }
    }

    /// Single-row forward pass with plain loops; used for prediction.
    pub fn eval_row(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = layer.bias.to_vec();
            for (i, &xi) in cur.iter().enumerate() {
                for (o, w) in next.iter_mut().zip(layer.weights.row(i)) {
                    *o += xi * w;
                }
            }
            if l < last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = next;
        }
        cur
    }

    /// Mean squared error over every element of the batch, and its gradient
    /// with respect to every layer.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> (f64, Vec<Layer>) {
        let trace = self.forward(x);
        let out = trace.activations.last().expect("non-empty trace");
        let n = out.len() as f64;
        let diff = out - &target;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let mut delta = diff * (2.0 / n);
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &trace.activations[l];
            let layer = &self.layers[l];
            let mut g = Layer::zeros(layer.fan_in(), layer.fan_out());
            general_mat_mul(1.0, &input.t(), &delta, 0.0, &mut g.weights);
            g.bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = Array2::zeros((delta.nrows(), layer.fan_in()));
                general_mat_mul(1.0, &delta, &layer.weights.t(), 0.0, &mut back);
                // tanh'(z) = 1 - tanh(z)^2, with tanh(z) the stored activation.
                back.zip_mut_with(input, |b, &h| *b *= 1.0 - h * h);
                delta = back;
            }
            grads.push(g);
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn loss(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> f64 {
        let trace = self.forward(x);
        let out = trace.activations.last().expect("non-empty trace");
        let n = out.len() as f64;
        out.iter()
            .zip(target.iter())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>()
            / n
    }

    /// Parameters flattened layer by layer, weights (row-major) then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(|w| *w = it.next().expect("param count"));
            layer.bias.iter_mut().for_each(|b| *b = it.next().expect("param count"));
        }
    }
}

pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let zeros: Vec<Layer> = net
            .layers
            .iter()
            .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, net: &mut Mlp, grads: &[Layer]) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let lr = self.learning_rate;
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let step = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            };
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|p, &g, m, v| step(p, g, m, v));
            ndarray::Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| step(p, g, m, v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn row_path_matches_batch_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[4, 16, 16, 4], &mut rng);
        let x = array![[0.1, -0.3, 0.7, 1.2], [-1.0, 0.0, 0.5, -0.2]];
        let trace = net.forward(x.view());
        let out = trace.activations.last().unwrap();
        for r in 0..2 {
            let row = net.eval_row(x.row(r).as_slice().unwrap());
            for k in 0..4 {
                assert!((row[k] - out[[r, k]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn init_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = Layer::uniform(64, 8, &mut rng);
        assert!(l.weights.iter().all(|w| w.abs() < 0.125));
        assert!(l.weights.iter().any(|w| w.abs() > 0.1));
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[4, 5, 4], &mut rng);
        let mut copy = Mlp::new(&[4, 5, 4], &mut rng);
        copy.set_flat_params(&net.flat_params());
        assert_eq!(copy, net);
        assert_eq!(net.n_params(), 4 * 5 + 5 + 5 * 4 + 4);
    }

    #[test]
    fn layer_file_shape_check() {
        let bad = LayerFile {
            weights: vec![vec![1.0, 2.0], vec![3.0]],
            bias: vec![0.0, 0.0],
        };
        assert!(Layer::from_file(&bad).is_none());
    }
}
