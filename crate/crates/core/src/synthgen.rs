//! Synthetic prospect data with planted feature importance.
//!
//! Each class draws its features independently from truncated normals on
//! [0,1]. The default table makes `dhi_index` and `final_pg` strongly
//! discriminative, `initial_pg` moderately so, and the quality scores weakly.

use thiserror::Error;

use crate::dataset::{Dataset, Features, Outcome, ProspectRecord, FEATURE_NAMES, NUM_FEATURES};
use crate::rng::Rng;

pub const DEFAULT_N: usize = 258;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("need at least 2 records, got {0}")]
    TooFew(usize),
    #[error("class-1 prior {0} must lie strictly between 0 and 1")]
    Prior(f64),
    #[error("{feature} class {class}: mean {value} must lie strictly between 0 and 1")]
    Mean {
        feature: String,
        class: u8,
        value: f64,
    },
    #[error("{feature} class {class}: std {value} must lie in (0, 0.5]")]
    Std {
        feature: String,
        class: u8,
        value: f64,
    },
}

/// Normal parameters of one feature within one class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

/// Class-conditional parameters for one feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureParams {
    pub success: Gaussian,
    pub failure: Gaussian,
}

impl FeatureParams {
    pub const fn shared_std(success_mean: f64, failure_mean: f64, std: f64) -> Self {
        Self {
            success: Gaussian {
                mean: success_mean,
                std,
            },
            failure: Gaussian {
                mean: failure_mean,
                std,
            },
        }
    }

    pub fn for_class(&self, outcome: Outcome) -> Gaussian {
        match outcome {
            Outcome::Success => self.success,
            Outcome::Failure => self.failure,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub features: [FeatureParams; NUM_FEATURES],
    /// Probability that a record is a success.
    pub prior: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        let quality = FeatureParams::shared_std(0.55, 0.45, 0.20);
        Self {
            features: [
                FeatureParams::shared_std(0.45, 0.35, 0.15),
                FeatureParams::shared_std(0.65, 0.35, 0.12),
                FeatureParams::shared_std(0.60, 0.30, 0.12),
                quality,
                quality,
                quality,
            ],
            prior: 0.5,
        }
    }
}

impl GeneratorParams {
    /// Identical parameters for both classes; no feature carries signal.
    pub fn symmetric() -> Self {
        let p = FeatureParams::shared_std(0.5, 0.5, 0.15);
        Self {
            features: [p; NUM_FEATURES],
            prior: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(SynthError::Prior(self.prior));
        }
        for (j, fp) in self.features.iter().enumerate() {
            for outcome in [Outcome::Failure, Outcome::Success] {
                let g = fp.for_class(outcome);
                let feature = FEATURE_NAMES[j].to_string();
                let class = outcome.label();
                if !(g.mean > 0.0 && g.mean < 1.0) {
                    return Err(SynthError::Mean {
                        feature,
                        class,
                        value: g.mean,
                    });
                }
                if !(g.std > 0.0 && g.std <= 0.5) {
                    return Err(SynthError::Std {
                        feature,
                        class,
                        value: g.std,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Normal(mean, std²) restricted to `[lo, hi]` by rejection.
pub fn truncated_normal_sample(mean: f64, std: f64, lo: f64, hi: f64, rng: &mut Rng) -> f64 {
    debug_assert!(lo < hi && std > 0.0);
    loop {
        let v = rng.normal(mean, std);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
}

/// `n` records with ids `0..n`. Per record: one uniform for the class, then
/// the six features in schema order.
pub fn generate(n: usize, seed: u64, params: &GeneratorParams) -> Result<Dataset, SynthError> {
    if n < 2 {
        return Err(SynthError::TooFew(n));
    }
    params.validate()?;
    let mut rng = Rng::seed_from_u64(seed);
    let records = (0..n as u64)
        .map(|id| {
            let outcome = if rng.next_f64() < params.prior {
                Outcome::Success
            } else {
                Outcome::Failure
            };
            let features: Features = std::array::from_fn(|j| {
                let g = params.features[j].for_class(outcome);
                truncated_normal_sample(g.mean, g.std, 0.0, 1.0, &mut rng)
            });
            ProspectRecord {
                id,
                features,
                outcome,
            }
        })
        .collect();
    Ok(Dataset::new(records).expect("generated records are in range with unique ids"))
}
