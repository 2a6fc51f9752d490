use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::smo::{self, SmoParams};
use super::{Dataset, SvmError};

/// Tolerance for the post-training KKT check.
pub const KKT_TOL: f64 = 1e-3;
/// Tolerance on `Σ λᵢ yᵢ = 0`.
pub const EQUALITY_TOL: f64 = 1e-6;

/// Per-feature standardisation fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl Normalization {
    /// Constant features get unit spread.
    pub fn fit(rows: &[[f64; 2]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; 2];
        let mut std = [0.0; 2];
        for f in 0..2 {
            mean[f] = rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / n;
            std[f] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64; 2]) -> [f64; 2] {
        [(x[0] - self.mean[0]) / self.std[0], (x[1] - self.mean[1]) / self.std[1]]
    }
}

/// A trained classifier. Support vectors are stored in the (possibly
/// standardised) space the kernel operates in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<[f64; 2]>,
    /// `λᵢ·yᵢ` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub box_constraint: f64,
    pub normalization: Option<Normalization>,
}

impl SvmModel {
    /// Decision value `f(x) = Σ λᵢyᵢK(xᵢ, x) + b` for a raw feature row.
    pub fn decision_function(&self, x: &[f64; 2]) -> f64 {
        let z = match &self.normalization {
            Some(n) => n.apply(x),
            None => *x,
        };
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, a)| a * self.kernel.eval(sv, &z))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64; 2]) -> bool {
        self.decision_function(x) >= 0.0
    }

    pub fn predict_all(&self, xs: &[[f64; 2]]) -> Vec<bool> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Mean hinge loss `(1/N) Σ max(0, 1 − yᵢ f(xᵢ))` with labels mapped to ±1.
    pub fn hinge_loss(&self, data: &Dataset) -> f64 {
        let f: Vec<f64> = data.x.iter().map(|x| self.decision_function(x)).collect();
        mean_hinge(&f, &data.y)
    }

    /// Structural validation for models loaded from outside.
    pub fn validate(&self) -> Result<(), SvmError> {
        self.kernel.validate()?;
        if self.support_vectors.len() != self.coefficients.len() {
            return Err(SvmError::InvalidModel(format!(
                "{} support vectors but {} coefficients",
                self.support_vectors.len(),
                self.coefficients.len()
            )));
        }
        if !(self.box_constraint > 0.0) || !self.box_constraint.is_finite() {
            return Err(SvmError::InvalidBoxConstraint(self.box_constraint));
        }
        let finite = self.bias.is_finite()
            && self.support_vectors.iter().flatten().all(|v| v.is_finite())
            && self.coefficients.iter().all(|v| v.is_finite());
        if !finite {
            return Err(SvmError::InvalidModel("non-finite parameter".into()));
        }
        if self.coefficients.iter().any(|a| a.abs() > self.box_constraint * (1.0 + 1e-9)) {
            return Err(SvmError::InvalidModel("coefficient outside the box constraint".into()));
        }
        if let Some(n) = &self.normalization {
            let ok = n.mean.iter().all(|v| v.is_finite()) && n.std.iter().all(|v| v.is_finite() && *v > 0.0);
            if !ok {
                return Err(SvmError::InvalidModel("bad normalization statistics".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let model: SvmModel = serde_json::from_str(text).map_err(|e| SvmError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn mean_hinge(decision_values: &[f64], labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    decision_values
        .iter()
        .zip(labels)
        .map(|(f, &y)| {
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * f).max(0.0)
        })
        .sum::<f64>()
        / labels.len() as f64
}

/// Worst-case residuals of the optimality conditions of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktReport {
    /// Largest excursion of any λ outside [0, C].
    pub max_box_violation: f64,
    /// |Σ λᵢ yᵢ|.
    pub equality_residual: f64,
    /// Largest violation of the three complementary-slackness cases.
    pub max_kkt_violation: f64,
}

impl KktReport {
    pub fn satisfied(&self) -> bool {
        self.max_box_violation == 0.0 && self.equality_residual <= EQUALITY_TOL && self.max_kkt_violation <= KKT_TOL
    }

    pub fn worst(self, other: KktReport) -> KktReport {
        KktReport {
            max_box_violation: self.max_box_violation.max(other.max_box_violation),
            equality_residual: self.equality_residual.max(other.equality_residual),
            max_kkt_violation: self.max_kkt_violation.max(other.max_kkt_violation),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedSvm {
    pub model: SvmModel,
    /// Multiplier of every training row, in input order.
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt: KktReport,
}

pub(crate) fn check_kkt(kernel: &[f64], y: &[f64], alpha: &[f64], bias: f64, c: f64) -> KktReport {
    let f = smo::expansion(kernel, y, alpha);
    let mut rep = KktReport::default();
    let mut eq = 0.0;
    for t in 0..alpha.len() {
        let a = alpha[t];
        rep.max_box_violation = rep.max_box_violation.max((-a).max(a - c).max(0.0));
        eq += a * y[t];
        let margin = y[t] * (f[t] + bias);
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        rep.max_kkt_violation = rep.max_kkt_violation.max(v);
    }
    rep.equality_residual = eq.abs();
    rep
}

/// Solves the dual on already-transformed rows with a precomputed Gram
/// matrix and checks the result.
pub(crate) fn fit_with_gram(
    rows: &[[f64; 2]],
    labels: &[f64],
    gram: &[f64],
    kernel: KernelSpec,
    c: f64,
    normalization: Option<Normalization>,
    params: &SmoParams,
) -> Result<TrainedSvm, SvmError> {
    let sol = smo::solve(gram, labels, c, params)?;
    let kkt = check_kkt(gram, labels, &sol.alpha, sol.bias, c);
    if !kkt.satisfied() {
        return Err(SvmError::KktViolation(format!(
            "box {:.3e}, equality {:.3e}, kkt {:.3e}",
            kkt.max_box_violation, kkt.equality_residual, kkt.max_kkt_violation
        )));
    }
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(rows[t]);
            coefficients.push(a * labels[t]);
        }
    }
    Ok(TrainedSvm {
        model: SvmModel {
            support_vectors,
            coefficients,
            bias: sol.bias,
            kernel,
            box_constraint: c,
            normalization,
        },
        alpha: sol.alpha,
        objective: sol.objective,
        iterations: sol.iterations,
        kkt,
    })
}

/// Trains on `data`; with `normalize`, features are standardised with the
/// training mean and standard deviation first.
pub fn train(
    data: &Dataset,
    kernel: KernelSpec,
    c: f64,
    normalize: bool,
    params: &SmoParams,
) -> Result<TrainedSvm, SvmError> {
    kernel.validate()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(SvmError::InvalidBoxConstraint(c));
    }
    if !data.all_finite() {
        return Err(SvmError::NonFiniteFeature);
    }
    if !data.has_both_classes() {
        return Err(SvmError::DegenerateWindow("training data has a single class".into()));
    }
    let normalization = normalize.then(|| Normalization::fit(&data.x));
    let rows: Vec<[f64; 2]> = match &normalization {
        Some(n) => data.x.iter().map(|x| n.apply(x)).collect(),
        None => data.x.clone(),
    };
    let gram = kernel.gram(&rows);
    fit_with_gram(&rows, &data.signed_labels(), &gram, kernel, c, normalization, params)
}
