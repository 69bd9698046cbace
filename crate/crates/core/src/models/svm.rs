use crate::dataset::{Features, Standardized, NUM_FEATURES};
use crate::rng::Rng;

use super::logreg::LogisticProblem;
use super::{sigmoid, BlackBox, ModelError};

#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Platt calibration: gradient-descent step and epoch budget.
    pub platt_lr: f64,
    pub platt_epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            epochs: 200,
            platt_lr: 0.1,
            platt_epochs: 2000,
        }
    }
}

/// Linear SVM; probability `σ(A·m + B)` of the margin `m = w·x + b`, with `A > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub weights: Features,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmModel {
    pub fn margin(&self, x: &Features) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Mean hinge loss `max(0, 1 − y·m)` with labels mapped to ±1.
    pub fn hinge_loss(&self, data: &Standardized) -> f64 {
        let total: f64 = data
            .x
            .iter()
            .zip(&data.y)
            .map(|(x, y)| (1.0 - signed(y.label()) * self.margin(x)).max(0.0))
            .sum();
        total / data.len() as f64
    }
}

impl BlackBox for SvmModel {
    fn predict_proba(&self, x: &Features) -> f64 {
        sigmoid(self.platt_a * self.margin(x) + self.platt_b)
    }
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Pegasos on the L2-regularized hinge loss, followed by Platt calibration
/// on the training margins. Returns the model and its final regularized
/// hinge objective.
///
/// The bias is learned as the weight of a constant input, so it shares the
/// `(1 − ηλ)` shrinkage; an unshrunk bias inherits the 1/(λt) steps of the
/// first few updates. Each epoch visits the rows in a freshly shuffled order.
pub fn train_svm(
    train: &Standardized,
    cfg: &SvmConfig,
    seed: u64,
) -> Result<(SvmModel, f64), ModelError> {
    if !train.has_both_classes() {
        return Err(ModelError::SingleClass);
    }
    let lambda = cfg.lambda;
    let mut rng = Rng::seed_from_u64(seed);
    // last slot is the bias
    let mut w = [0.0; NUM_FEATURES + 1];
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut t = 0u64;
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &train.x[i];
            let y = signed(train.y[i].label());
            let m = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[NUM_FEATURES];
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if y * m < 1.0 {
                for j in 0..NUM_FEATURES {
                    w[j] += eta * y * x[j];
                }
                w[NUM_FEATURES] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= s;
                }
            }
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteLoss(cfg.epochs));
    }

    let mut model = SvmModel {
        weights: std::array::from_fn(|j| w[j]),
        bias: w[NUM_FEATURES],
        platt_a: 1.0,
        platt_b: 0.0,
    };
    let margins: Vec<[f64; 1]> = train.x.iter().map(|x| [model.margin(x)]).collect();
    let rows: Vec<&[f64]> = margins.iter().map(|m| m.as_slice()).collect();
    let labels: Vec<f64> = train.y.iter().map(|y| y.as_f64()).collect();
    let platt = LogisticProblem {
        rows: &rows,
        labels: &labels,
        l2: 0.0,
    };
    let (a, b, _) = platt.descend(vec![1.0], 0.0, cfg.platt_lr, cfg.platt_epochs)?;
    if !(a[0] > 0.0) {
        return Err(ModelError::DegeneratePlatt(a[0]));
    }
    model.platt_a = a[0];
    model.platt_b = b;

    let objective = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + model.hinge_loss(train);
    Ok((model, objective))
}
