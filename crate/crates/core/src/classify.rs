//! Classifiers: deterministic decision functions from feature space to `{0,1}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("dimension mismatch: classifier uses {needed} coordinates, input has {got}")]
    DimensionMismatch { needed: usize, got: usize },
}

/// A deterministic classification rule.
pub trait Classifier {
    /// Predicted label for `x`. Must be a pure function of `x`.
    fn decide(&self, x: &[f64]) -> u8;

    /// Human-readable parameterization.
    fn descriptor(&self) -> String;
}

/// Halfspace rule `x -> 1[a^T x_prefix + b >= 0]` on the first `coeffs.len()`
/// coordinates. Ties at exactly zero classify as 1.
///
/// Constant rules are the degenerate case `coeffs = []`: the sign of the
/// intercept decides every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub coeffs: Vec<f64>,
    pub intercept: f64,
}

impl LinearClassifier {
    pub fn new(coeffs: Vec<f64>, intercept: f64) -> Self {
        Self { coeffs, intercept }
    }

    /// The constant rule predicting `label` everywhere.
    pub fn constant(label: u8) -> Self {
        Self {
            coeffs: Vec::new(),
            intercept: if label == 1 { 0.0 } else { -1.0 },
        }
    }

    /// Active dimension: the number of leading coordinates the rule reads.
    pub fn active_dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(x.iter())
            .map(|(a, v)| a * v)
            .sum::<f64>()
            + self.intercept
    }
}

impl Classifier for LinearClassifier {
    fn decide(&self, x: &[f64]) -> u8 {
        debug_assert!(x.len() >= self.coeffs.len());
        u8::from(self.margin(x) >= 0.0)
    }

    fn descriptor(&self) -> String {
        format!("linear(a={:?}, b={}, m={})", self.coeffs, self.intercept, self.coeffs.len())
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn decide(&self, x: &[f64]) -> u8 {
        (**self).decide(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// `1[a^T x_prefix + b >= 0]` with an explicit dimension check.
pub fn predict_linear(a: &[f64], b: f64, x: &[f64]) -> Result<u8, ClassifyError> {
    if a.len() > x.len() {
        return Err(ClassifyError::DimensionMismatch {
            needed: a.len(),
            got: x.len(),
        });
    }
    Ok(LinearClassifier::new(a.to_vec(), b).decide(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_ties_classify_as_one() {
        assert_eq!(predict_linear(&[1.0], 0.0, &[0.0, 9.0]).unwrap(), 1);
    }

    #[test]
    fn sign_evaluation() {
        assert_eq!(predict_linear(&[1.0], -1.0, &[0.5, 9.0]).unwrap(), 0);
        assert_eq!(predict_linear(&[1.0], -1.0, &[1.5]).unwrap(), 1);
    }

    #[test]
    fn constant_classifier() {
        assert_eq!(predict_linear(&[0.0], -1.0, &[123.0]).unwrap(), 0);
        assert_eq!(LinearClassifier::constant(1).decide(&[1.0, 2.0]), 1);
        assert_eq!(LinearClassifier::constant(0).decide(&[1.0, 2.0]), 0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert_eq!(
            predict_linear(&[1.0, 2.0], 0.0, &[1.0]).unwrap_err(),
            ClassifyError::DimensionMismatch { needed: 2, got: 1 }
        );
    }
}
