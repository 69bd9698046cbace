//! Local surrogate explanations.
//!
//! Around a queried instance `x` (in standardized space) the explainer draws
//! a Gaussian cloud `Z` that contains `x` itself, weights each point by the
//! proximity kernel `exp(−‖x − z‖²/σ)`, queries the black box on every point
//! and fits a weighted LASSO to those probabilities. The surrogate's
//! coefficients are the explanation.

use thiserror::Error;

use crate::dataset::{DatasetError, Features, Scaler, FEATURE_NAMES, NUM_FEATURES};
use crate::linsolve::{weighted_lasso_cd, SolverError, WeightedProblem};
use crate::models::BlackBox;
use crate::rng::Rng;

pub const SOLVER_TOL: f64 = 1e-8;
pub const SOLVER_MAX_ITER: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("n_samples must be at least {min}, got {found}")]
    TooFewSamples { min: usize, found: usize },
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("lambda must be non-negative and finite, got {0}")]
    Lambda(f64),
    #[error("instance: {0}")]
    Instance(#[from] DatasetError),
    #[error("instance feature `{feature}`={value} outside [0,1]")]
    OutOfRange { feature: &'static str, value: f64 },
    #[error("non-finite input to the proximity kernel")]
    NonFiniteKernelInput,
    #[error("black box returned non-finite value {value} at neighborhood row {row}")]
    NonFiniteQuery { row: usize, value: f64 },
    #[error("length mismatch: {expected} neighborhood rows, {found} surrogate values")]
    LengthMismatch { expected: usize, found: usize },
    #[error("surrogate fit: {0}")]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplainConfig {
    pub n_samples: usize,
    /// Kernel width; the kernel divides the squared distance by `sigma` itself.
    pub sigma: f64,
    pub l1: f64,
    pub seed: u64,
}

pub const MIN_SAMPLES: usize = 10;

/// `0.5625·d`, i.e. `(0.75·√d)²`, for `d = 6`.
pub const DEFAULT_SIGMA: f64 = 0.5625 * NUM_FEATURES as f64;

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            sigma: DEFAULT_SIGMA,
            l1: 0.001,
            seed: 0,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.n_samples < MIN_SAMPLES {
            return Err(ExplainError::TooFewSamples {
                min: MIN_SAMPLES,
                found: self.n_samples,
            });
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(ExplainError::Sigma(self.sigma));
        }
        if !(self.l1.is_finite() && self.l1 >= 0.0) {
            return Err(ExplainError::Lambda(self.l1));
        }
        Ok(())
    }

    /// Per-instance configuration: seed offset by the record id, so batch
    /// results do not depend on processing order.
    pub fn for_instance(&self, id: u64) -> Self {
        Self {
            seed: self.seed.wrapping_add(id),
            ..self.clone()
        }
    }
}

/// `exp(−‖x − z‖² / σ)`.
pub fn proximity_weight(x: &[f64], z: &[f64], sigma: f64) -> Result<f64, ExplainError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(ExplainError::Sigma(sigma));
    }
    if x.len() != z.len() {
        return Err(ExplainError::LengthMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    if x.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(ExplainError::NonFiniteKernelInput);
    }
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-d2 / sigma).exp())
}

/// The sampled set `Z` with kernel weights and black-box outputs. Row 0 is
/// the instance itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    pub samples: Vec<Features>,
    pub proximity: Vec<f64>,
    pub f_values: Vec<f64>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Builds `cfg.n_samples` rows: `x`, then `x + ε` with `ε ~ N(0, I)`.
/// Does not enforce the minimum sample count, so a one-row neighborhood
/// is possible here.
pub fn sample_neighborhood(
    x: &Features,
    model: &dyn BlackBox,
    cfg: &ExplainConfig,
) -> Result<Neighborhood, ExplainError> {
    let n = cfg.n_samples.max(1);
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(n);
    samples.push(*x);
    for _ in 1..n {
        samples.push(std::array::from_fn(|j| x[j] + rng.standard_normal()));
    }
    let proximity = samples
        .iter()
        .map(|z| proximity_weight(x, z, cfg.sigma))
        .collect::<Result<Vec<_>, _>>()?;
    let f_values = samples
        .iter()
        .enumerate()
        .map(|(row, z)| {
            let value = model.predict_proba(z);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(ExplainError::NonFiniteQuery { row, value })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Neighborhood {
        samples,
        proximity,
        f_values,
    })
}

/// `Σᵢ πᵢ (fᵢ − gᵢ)²`.
pub fn fidelity_loss(nb: &Neighborhood, g_values: &[f64]) -> Result<f64, ExplainError> {
    if g_values.len() != nb.len() {
        return Err(ExplainError::LengthMismatch {
            expected: nb.len(),
            found: g_values.len(),
        });
    }
    Ok(nb
        .proximity
        .iter()
        .zip(&nb.f_values)
        .zip(g_values)
        .map(|((p, f), g)| p * (f - g) * (f - g))
        .sum())
}

/// Surrogate fitted in standardized space.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSurrogate {
    pub prediction: f64,
    pub weights: Features,
    pub intercept: f64,
    pub fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LocalSurrogate {
    pub fn evaluate(&self, z: &Features) -> f64 {
        self.intercept + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Builds the weighted regression problem `Z → f(Z)` with kernel weights.
pub fn surrogate_problem(nb: &Neighborhood, l1: f64) -> Result<WeightedProblem, ExplainError> {
    Ok(WeightedProblem::from_rows(
        &nb.samples,
        nb.f_values.clone(),
        nb.proximity.clone(),
        l1,
    )?)
}

/// Explains the black box at a standardized point. Non-converged fits are
/// returned with `converged = false`.
pub fn fit_local_surrogate(
    model: &dyn BlackBox,
    x: &Features,
    cfg: &ExplainConfig,
) -> Result<(LocalSurrogate, Neighborhood), ExplainError> {
    cfg.validate()?;
    let nb = sample_neighborhood(x, model, cfg)?;
    let problem = surrogate_problem(&nb, cfg.l1)?;
    let fit = weighted_lasso_cd(&problem, SOLVER_TOL, SOLVER_MAX_ITER);
    let weights: Features = fit
        .coefficients
        .as_slice()
        .try_into()
        .expect("six coefficients");
    let mut surrogate = LocalSurrogate {
        prediction: nb.f_values[0],
        weights,
        intercept: fit.intercept,
        fidelity: 0.0,
        converged: fit.converged,
        iterations: fit.iterations,
    };
    let g: Vec<f64> = nb.samples.iter().map(|z| surrogate.evaluate(z)).collect();
    surrogate.fidelity = fidelity_loss(&nb, &g)?;
    Ok((surrogate, nb))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWeight {
    pub name: &'static str,
    /// Raw (unstandardized) feature value of the instance.
    pub value: f64,
    pub weight: f64,
}

/// Per-instance explanation: one weight per feature in schema order.
#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub instance_id: u64,
    pub prediction: f64,
    pub features: [FeatureWeight; NUM_FEATURES],
    pub intercept: f64,
    /// Weighted squared loss of the surrogate, without the L1 term.
    pub fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
    pub config: ExplainConfig,
}

impl Explanation {
    pub fn weights(&self) -> Features {
        self.features.each_ref().map(|f| f.weight)
    }
}

pub fn explain_instance(
    model: &dyn BlackBox,
    instance_id: u64,
    x_raw: &[f64],
    scaler: &Scaler,
    cfg: &ExplainConfig,
) -> Result<Explanation, ExplainError> {
    let x = scaler.apply_checked(x_raw)?;
    for (j, &v) in x_raw.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ExplainError::OutOfRange {
                feature: FEATURE_NAMES[j],
                value: v,
            });
        }
    }
    let (s, _) = fit_local_surrogate(model, &x, cfg)?;
    Ok(Explanation {
        instance_id,
        prediction: s.prediction,
        features: std::array::from_fn(|j| FeatureWeight {
            name: FEATURE_NAMES[j],
            value: x_raw[j],
            weight: s.weights[j],
        }),
        intercept: s.intercept,
        fidelity: s.fidelity,
        converged: s.converged,
        iterations: s.iterations,
        config: cfg.clone(),
    })
}
