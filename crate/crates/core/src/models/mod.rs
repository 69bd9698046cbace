//! Black-box classifiers: logistic regression, linear SVM with Platt
//! calibration, and a one-hidden-layer MLP. All of them are trained and
//! queried on standardized features.

mod logreg;
mod mlp;
mod persist;
mod svm;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{Features, Standardized, NUM_FEATURES};

pub use logreg::{logreg_gradient, logreg_loss, train_logreg, LogRegConfig, LogRegModel};
pub use mlp::{mlp_gradient, mlp_loss, train_mlp, MlpConfig, MlpGradient, MlpModel};
pub use persist::{load_model, save_model, ModelFile, SplitRecord, FORMAT_HEADER};
pub use svm::{train_svm, SvmConfig, SvmModel};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training set must contain both classes")]
    SingleClass,
    #[error("empty dataset")]
    Empty,
    #[error("non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("expected {NUM_FEATURES} inputs, got {0}")]
    InputLength(usize),
    #[error("input {0} is not finite")]
    NonFiniteInput(usize),
    #[error("hidden layer needs at least one unit")]
    NoHiddenUnits,
    #[error("Platt calibration produced non-positive slope {0}")]
    DegeneratePlatt(f64),
    #[error("cannot access {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line 1: expected `{FORMAT_HEADER} <logreg|svm|mlp>`, found `{0}`")]
    BadHeader(String),
    #[error("unsupported model format version `{0}`")]
    Version(String),
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("missing section `{0}`")]
    MissingSection(String),
    #[error("line {line}: expected section `{expected}`, found `{found}`")]
    UnexpectedSection {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("section `{section}`: expected {expected} values, found {found}")]
    CountMismatch {
        section: String,
        expected: usize,
        found: usize,
    },
    #[error("section `{section}`: `{value}` is not a number")]
    NotNumeric { section: String, value: String },
    #[error("section `{section}`: {reason}")]
    InvalidSection { section: String, reason: String },
    #[error("line {0}: unexpected trailing content")]
    TrailingContent(usize),
}

/// A classifier queried only through its probability of success.
/// Implementations must be pure: the same input always yields the same output.
pub trait BlackBox: Sync {
    fn predict_proba(&self, x: &Features) -> f64;
}

impl<F> BlackBox for F
where
    F: Fn(&Features) -> f64 + Sync,
{
    fn predict_proba(&self, x: &Features) -> f64 {
        self(x)
    }
}

/// Length- and finiteness-checked query.
pub fn predict_proba(model: &dyn BlackBox, x: &[f64]) -> Result<f64, ModelError> {
    let x: &Features = x.try_into().map_err(|_| ModelError::InputLength(x.len()))?;
    if let Some(j) = x.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput(j));
    }
    Ok(model.predict_proba(x))
}

/// Fraction of rows where `predict_proba ≥ 0.5` matches the label.
pub fn accuracy(model: &dyn BlackBox, data: &Standardized) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Err(ModelError::Empty);
    }
    let correct = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(x, y)| (model.predict_proba(x) >= 0.5) == (y.label() == 1))
        .count();
    Ok(correct as f64 / data.len() as f64)
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Cross-entropy of logit `t` against label `y ∈ {0,1}`.
pub(crate) fn logit_cross_entropy(t: f64, y: f64) -> f64 {
    softplus(t) - y * t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LogReg,
    Svm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LogReg, ModelKind::Svm, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" => Ok(ModelKind::LogReg),
            "svm" => Ok(ModelKind::Svm),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    LogReg(LogRegModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::LogReg(_) => ModelKind::LogReg,
            Model::Svm(_) => ModelKind::Svm,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }
}

impl BlackBox for Model {
    fn predict_proba(&self, x: &Features) -> f64 {
        match self {
            Model::LogReg(m) => m.predict_proba(x),
            Model::Svm(m) => m.predict_proba(x),
            Model::Mlp(m) => m.predict_proba(x),
        }
    }
}

/// Outcome of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub kind: ModelKind,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epochs: usize,
}

/// Per-epoch record of a full-batch trainer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    /// Objective before the first step and after every accepted step.
    pub losses: Vec<f64>,
    pub epochs: usize,
}

impl TrainTrace {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().unwrap_or(&f64::NAN)
    }
}

/// Hyperparameters for all three families; defaults match the CLI.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainConfig {
    pub logreg: LogRegConfig,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
}

/// Trains `kind` with `seed` and evaluates it on both sides of the split.
pub fn fit(
    kind: ModelKind,
    train: &Standardized,
    test: &Standardized,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Model, TrainReport), ModelError> {
    let (model, final_loss, epochs) = match kind {
        ModelKind::LogReg => {
            let (m, trace) = train_logreg(train, &cfg.logreg)?;
            (Model::LogReg(m), trace.final_loss(), trace.epochs)
        }
        ModelKind::Svm => {
            let (m, loss) = train_svm(train, &cfg.svm, seed)?;
            (Model::Svm(m), loss, cfg.svm.epochs)
        }
        ModelKind::Mlp => {
            let (m, trace) = train_mlp(train, &cfg.mlp, seed)?;
            (Model::Mlp(m), trace.final_loss(), trace.epochs)
        }
    };
    let report = TrainReport {
        kind,
        final_loss,
        train_accuracy: accuracy(&model, train)?,
        test_accuracy: accuracy(&model, test)?,
        epochs,
    };
    Ok((model, report))
}
