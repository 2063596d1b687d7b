//! Robust classification by trimming.
//!
//! The crate computes trimmed classification errors (both by minimizing over
//! the weight polytope and through the positive-part closed form), selects the
//! trimming proportion and the classifier class by penalized empirical risk,
//! reports the trimmed-out observations as outliers, and ships a simulation
//! harness that checks the underlying concentration and oracle bounds
//! numerically.

pub mod classify;
pub mod family;
pub mod sample;
pub mod select;
pub mod sim;
pub mod trim;

pub use classify::{predict_linear, Classifier, LinearClassifier};
pub use family::{
    bayes_two_gaussians, erm_exact_1d, erm_exact_enum, erm_stochastic, train, FamilyCollection,
    ModelFamily, TrainerKind, TwoGaussianSpec,
};
pub use sample::LabeledSample;
pub use select::{
    oracle_bound_joint, oracle_bound_single, pen_joint, pen_single, select_alpha,
    select_alpha_model, SelectionConfig, SelectionResult,
};
pub use sim::{ContaminationSpec, ExperimentReport, OutlierKind};
pub use trim::{
    bias_bound, empirical_error, empirical_trimmed_error_polytope, lipschitz_alpha_bound,
    perfect_separation, trimmed_bayes_error, trimmed_error_closed_form,
    trimmed_error_decomposition_oracle, MixtureSpec, TrimLevel, TrimWeights,
};
