use serde::{Deserialize, Serialize};

use super::SvmError;

/// Feature rows `(CQI, RSRP dBm)` with boolean labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn new(x: Vec<[f64; 2]>, y: Vec<bool>) -> Result<Self, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v).count();
        (self.y.len() - pos, pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (neg, pos) = self.class_counts();
        neg > 0 && pos > 0
    }

    pub fn all_finite(&self) -> bool {
        self.x.iter().all(|r| r[0].is_finite() && r[1].is_finite())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Labels mapped to ±1.
    pub fn signed_labels(&self) -> Vec<f64> {
        self.y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect()
    }
}
