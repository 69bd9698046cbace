use crate::dataset::{Features, Standardized, NUM_FEATURES};

use super::{logit_cross_entropy, sigmoid, BlackBox, ModelError, TrainTrace};

const GRAD_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 2000,
            l2: 1e-3,
        }
    }
}

/// `p(x) = σ(w·x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRegModel {
    pub weights: Features,
    pub bias: f64,
}

impl LogRegModel {
    pub fn logit(&self, x: &Features) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl BlackBox for LogRegModel {
    fn predict_proba(&self, x: &Features) -> f64 {
        sigmoid(self.logit(x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full-batch logistic regression on arbitrary-width rows. Shared by the
/// logistic trainer and the Platt calibration of the SVM.
pub(crate) struct LogisticProblem<'a> {
    pub rows: &'a [&'a [f64]],
    pub labels: &'a [f64],
    pub l2: f64,
}

impl LogisticProblem<'_> {
    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.rows.len() as f64;
        let ce: f64 = self
            .rows
            .iter()
            .zip(self.labels)
            .map(|(x, &y)| logit_cross_entropy(dot(w, x) + b, y))
            .sum();
        ce / n + 0.5 * self.l2 * dot(w, w)
    }

    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.rows.len() as f64;
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for (x, &y) in self.rows.iter().zip(self.labels) {
            let r = sigmoid(dot(w, x) + b) - y;
            for (g, xi) in gw.iter_mut().zip(x.iter()) {
                *g += r * xi;
            }
            gb += r;
        }
        for (g, wi) in gw.iter_mut().zip(w) {
            *g = *g / n + self.l2 * wi;
        }
        (gw, gb / n)
    }

    /// Gradient descent from `(w, b)`. A step that raises the loss is
    /// retried with half the step size (the halving persists); after 30
    /// failed halvings training stops.
    pub fn descend(
        &self,
        mut w: Vec<f64>,
        mut b: f64,
        lr: f64,
        epochs: usize,
    ) -> Result<(Vec<f64>, f64, TrainTrace), ModelError> {
        let mut step = lr;
        let mut loss = self.loss(&w, b);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss(0));
        }
        let mut trace = TrainTrace {
            losses: vec![loss],
            epochs: 0,
        };
        'epochs: for epoch in 1..=epochs {
            let (gw, gb) = self.gradient(&w, b);
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < GRAD_TOL {
                break;
            }
            let mut halvings = 0;
            loop {
                let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
                let cand_b = b - step * gb;
                let cand_loss = self.loss(&cand_w, cand_b);
                if !cand_loss.is_finite() && halvings == MAX_HALVINGS {
                    return Err(ModelError::NonFiniteLoss(epoch));
                }
                if cand_loss <= loss {
                    w = cand_w;
                    b = cand_b;
                    loss = cand_loss;
                    break;
                }
                if halvings == MAX_HALVINGS {
                    break 'epochs;
                }
                step *= 0.5;
                halvings += 1;
            }
            trace.losses.push(loss);
            trace.epochs = epoch;
        }
        Ok((w, b, trace))
    }
}

fn labels(data: &Standardized) -> Vec<f64> {
    data.y.iter().map(|y| y.as_f64()).collect()
}

/// Full-batch gradient descent on mean cross-entropy + (l2/2)‖w‖², starting
/// from all-zero parameters. Stops after `cfg.epochs` steps or once the
/// gradient's ∞-norm drops below 1e-8.
pub fn train_logreg(
    train: &Standardized,
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, TrainTrace), ModelError> {
    if !train.has_both_classes() {
        return Err(ModelError::SingleClass);
    }
    let rows: Vec<&[f64]> = train.x.iter().map(|r| r.as_slice()).collect();
    let y = labels(train);
    let problem = LogisticProblem {
        rows: &rows,
        labels: &y,
        l2: cfg.l2,
    };
    let (w, bias, trace) = problem.descend(vec![0.0; NUM_FEATURES], 0.0, cfg.lr, cfg.epochs)?;
    let weights = w.try_into().expect("width preserved");
    Ok((LogRegModel { weights, bias }, trace))
}

/// Regularized mean cross-entropy at the model's parameters.
pub fn logreg_loss(model: &LogRegModel, batch: &Standardized, l2: f64) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Empty);
    }
    let rows: Vec<&[f64]> = batch.x.iter().map(|r| r.as_slice()).collect();
    let y = labels(batch);
    Ok(LogisticProblem {
        rows: &rows,
        labels: &y,
        l2,
    }
    .loss(&model.weights, model.bias))
}

/// Analytic gradient `(∂/∂w, ∂/∂b)` of [`logreg_loss`].
pub fn logreg_gradient(
    model: &LogRegModel,
    batch: &Standardized,
    l2: f64,
) -> Result<(Features, f64), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Empty);
    }
    let rows: Vec<&[f64]> = batch.x.iter().map(|r| r.as_slice()).collect();
    let y = labels(batch);
    let (gw, gb) = LogisticProblem {
        rows: &rows,
        labels: &y,
        l2,
    }
    .gradient(&model.weights, model.bias);
    Ok((gw.try_into().expect("width preserved"), gb))
}
