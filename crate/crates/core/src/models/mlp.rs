use crate::dataset::{Features, Standardized, NUM_FEATURES};
use crate::rng::Rng;

use super::{logit_cross_entropy, sigmoid, BlackBox, ModelError, TrainTrace};

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 8,
            lr: 0.05,
            epochs: 500,
        }
    }
}

/// One tanh hidden layer and a sigmoid output:
/// `p(x) = σ(v·tanh(Wx + c) + d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub hidden_w: Vec<Features>,
    pub hidden_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

/// Gradient with the same layout as [`MlpModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradient {
    pub hidden_w: Vec<Features>,
    pub hidden_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

impl MlpModel {
    pub fn hidden(&self) -> usize {
        self.hidden_b.len()
    }

    /// Uniform(±1/√fan_in) initialization, drawn in the order
    /// hidden weights (row-major), hidden biases, output weights, output bias.
    pub fn init(hidden: usize, rng: &mut Rng) -> Self {
        let a = 1.0 / (NUM_FEATURES as f64).sqrt();
        let b = 1.0 / (hidden as f64).sqrt();
        let hidden_w = (0..hidden)
            .map(|_| std::array::from_fn(|_| rng.uniform(-a, a)))
            .collect();
        let hidden_b = (0..hidden).map(|_| rng.uniform(-a, a)).collect();
        let out_w = (0..hidden).map(|_| rng.uniform(-b, b)).collect();
        let out_b = rng.uniform(-b, b);
        Self {
            hidden_w,
            hidden_b,
            out_w,
            out_b,
        }
    }

    fn activations(&self, x: &Features) -> Vec<f64> {
        self.hidden_w
            .iter()
            .zip(&self.hidden_b)
            .map(|(row, c)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + c).tanh())
            .collect()
    }

    fn logit_from(&self, h: &[f64]) -> f64 {
        self.out_w.iter().zip(h).map(|(v, a)| v * a).sum::<f64>() + self.out_b
    }

    fn zero_gradient(&self) -> MlpGradient {
        MlpGradient {
            hidden_w: vec![[0.0; NUM_FEATURES]; self.hidden()],
            hidden_b: vec![0.0; self.hidden()],
            out_w: vec![0.0; self.hidden()],
            out_b: 0.0,
        }
    }

    fn step(&mut self, g: &MlpGradient, lr: f64) {
        for (row, grow) in self.hidden_w.iter_mut().zip(&g.hidden_w) {
            for (w, gw) in row.iter_mut().zip(grow) {
                *w -= lr * gw;
            }
        }
        for (c, gc) in self.hidden_b.iter_mut().zip(&g.hidden_b) {
            *c -= lr * gc;
        }
        for (v, gv) in self.out_w.iter_mut().zip(&g.out_w) {
            *v -= lr * gv;
        }
        self.out_b -= lr * g.out_b;
    }
}

impl BlackBox for MlpModel {
    fn predict_proba(&self, x: &Features) -> f64 {
        sigmoid(self.logit_from(&self.activations(x)))
    }
}

/// Mean cross-entropy.
pub fn mlp_loss(model: &MlpModel, batch: &Standardized) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Empty);
    }
    let total: f64 = batch
        .x
        .iter()
        .zip(&batch.y)
        .map(|(x, y)| logit_cross_entropy(model.logit_from(&model.activations(x)), y.as_f64()))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Backpropagated gradient of [`mlp_loss`].
pub fn mlp_gradient(model: &MlpModel, batch: &Standardized) -> Result<MlpGradient, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut g = model.zero_gradient();
    for (x, y) in batch.x.iter().zip(&batch.y) {
        let h = model.activations(x);
        let delta = sigmoid(model.logit_from(&h)) - y.as_f64();
        g.out_b += delta;
        for k in 0..model.hidden() {
            g.out_w[k] += delta * h[k];
            let dh = delta * model.out_w[k] * (1.0 - h[k] * h[k]);
            g.hidden_b[k] += dh;
            for j in 0..NUM_FEATURES {
                g.hidden_w[k][j] += dh * x[j];
            }
        }
    }
    let n = batch.len() as f64;
    g.out_b /= n;
    g.out_w.iter_mut().for_each(|v| *v /= n);
    g.hidden_b.iter_mut().for_each(|v| *v /= n);
    g.hidden_w.iter_mut().flatten().for_each(|v| *v /= n);
    Ok(g)
}

/// Full-batch gradient descent on mean cross-entropy.
pub fn train_mlp(
    train: &Standardized,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<(MlpModel, TrainTrace), ModelError> {
    if cfg.hidden == 0 {
        return Err(ModelError::NoHiddenUnits);
    }
    if !train.has_both_classes() {
        return Err(ModelError::SingleClass);
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut model = MlpModel::init(cfg.hidden, &mut rng);
    let mut trace = TrainTrace::default();
    for epoch in 0..cfg.epochs {
        let loss = mlp_loss(&model, train)?;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss(epoch));
        }
        trace.losses.push(loss);
        let g = mlp_gradient(&model, train)?;
        model.step(&g, cfg.lr);
        trace.epochs = epoch + 1;
    }
    let loss = mlp_loss(&model, train)?;
    if !loss.is_finite() {
        return Err(ModelError::NonFiniteLoss(cfg.epochs));
    }
    trace.losses.push(loss);
    Ok((model, trace))
}
