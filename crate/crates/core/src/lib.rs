//! Model-agnostic local explanations for hydrocarbon prospect risking.
//!
//! The crate covers the full workflow: synthetic prospect data
//! ([`synthgen`]), loading and standardizing it ([`dataset`]), training
//! black-box classifiers ([`models`]), explaining single predictions with
//! a kernel-weighted sparse linear surrogate ([`explain`], backed by
//! [`linsolve`]) and rendering the results ([`report`]).

pub mod dataset;
pub mod explain;
pub mod linsolve;
pub mod models;
pub mod numfmt;
pub mod report;
pub mod rng;
pub mod synthgen;

pub use dataset::{
    class_feature_stats, fit_scaler, load_dataset, split_train_test, ClassStats, Dataset, Features,
    Outcome, ProspectRecord, Scaler, Standardized, FEATURE_NAMES, NUM_FEATURES,
};
pub use explain::{explain_instance, ExplainConfig, Explanation, Neighborhood};
pub use linsolve::{weighted_lasso_cd, weighted_ols_oracle, LinearFit, WeightedProblem};
pub use models::{accuracy, BlackBox, Model, ModelFile, ModelKind, TrainConfig, TrainReport};
pub use synthgen::{generate, GeneratorParams};
