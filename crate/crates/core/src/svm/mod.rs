//! Two-feature soft-margin SVM: kernels, SMO dual solver, prediction, hinge
//! loss and cross-validated hyperparameter search.

mod cv;
mod dataset;
mod kernel;
mod model;
mod smo;

use thiserror::Error;

pub use cv::{
    grid_search_cv, misclassification_error, split_train_test, stratified_folds, FitStats, GridPoint,
    GridSearchResult, HyperGrid, KernelFamily,
};
pub use dataset::Dataset;
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use model::{mean_hinge, train, KktReport, Normalization, SvmModel, TrainedSvm, EQUALITY_TOL, KKT_TOL};
pub use smo::{dual_objective, solve as smo_solve, SmoParams, SmoSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("box constraint must be positive and finite, got {0}")]
    InvalidBoxConstraint(f64),
    #[error("SMO did not reach tolerance within {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("trained model violates optimality conditions: {0}")]
    KktViolation(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
