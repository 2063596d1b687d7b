//! Labeled binary-classification samples.
//!
//! A [`LabeledSample`] is an immutable, index-stable list of `(label, features)`
//! pairs with labels in `{0,1}`. Index `i` always refers to the same observation,
//! which is what makes the reported trimmed index sets meaningful.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("empty input: a sample needs at least one observation")]
    Empty,
    #[error("dimension mismatch at row {row}: expected {expected} features, got {got}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("label outside {{0,1}} at row {row}: got {label}")]
    LabelOutOfRange { row: usize, label: i64 },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
}

/// Training set of `(label, feature-vector)` pairs.
///
/// Labels are stored as `{0,1}` integers so that indicator arithmetic on
/// misclassification events stays exact.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    labels: Vec<u8>,
    features: Vec<Vec<f64>>,
    dim: usize,
}

impl LabeledSample {
    /// Validates raw rows into a sample. Rejects empty input, labels outside
    /// `{0,1}`, inconsistent feature dimensions and non-finite feature values,
    /// each reported with the offending row index. Row order is preserved.
    pub fn validate(rows: &[(i64, Vec<f64>)]) -> Result<Self, SampleError> {
        let first = rows.first().ok_or(SampleError::Empty)?;
        let dim = first.1.len();
        let mut labels = Vec::with_capacity(rows.len());
        let mut features = Vec::with_capacity(rows.len());
        for (row, (label, x)) in rows.iter().enumerate() {
            if !matches!(label, 0 | 1) {
                return Err(SampleError::LabelOutOfRange { row, label: *label });
            }
            if x.len() != dim {
                return Err(SampleError::DimensionMismatch {
                    row,
                    expected: dim,
                    got: x.len(),
                });
            }
            if let Some(col) = x.iter().position(|v| !v.is_finite()) {
                return Err(SampleError::NonFiniteFeature { row, col });
            }
            labels.push(*label as u8);
            features.push(x.clone());
        }
        Ok(Self {
            labels,
            features,
            dim,
        })
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a constructed sample is never empty
    }

    /// Ambient feature dimension `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &[f64])> + '_ {
        self.labels
            .iter()
            .copied()
            .zip(self.features.iter().map(|v| v.as_slice()))
    }
}
