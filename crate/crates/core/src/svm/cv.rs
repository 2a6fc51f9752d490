//! Stratified train/test split, stratified K-fold cross-validation and the
//! exhaustive hyperparameter grid search.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelKind, KernelSpec};
use super::model::{fit_with_gram, mean_hinge, KktReport, Normalization};
use super::smo::SmoParams;
use super::{Dataset, SvmError};

/// Fraction of mismatched labels.
pub fn misclassification_error(predicted: &[bool], truth: &[bool]) -> Result<f64, SvmError> {
    if predicted.len() != truth.len() {
        return Err(SvmError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(SvmError::DegenerateWindow("empty test set".into()));
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

fn class_indices(y: &[bool]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &v) in y.iter().enumerate() {
        out[v as usize].push(i);
    }
    out
}

/// Stratified random split with `⌈r_train·N⌉` training rows.
pub fn split_train_test<R: Rng>(data: &Dataset, r_train: f64, rng: &mut R) -> Result<(Dataset, Dataset), SvmError> {
    let n = data.len();
    if n < 3 {
        return Err(SvmError::DegenerateWindow(format!("{n} samples cannot be split")));
    }
    if !(r_train > 0.0 && r_train < 1.0) {
        return Err(SvmError::DegenerateWindow(format!("training ratio {r_train} outside (0, 1)")));
    }
    let n_train = ((r_train * n as f64).ceil() as usize).min(n);
    let mut classes = class_indices(&data.y);

    // Largest-remainder apportionment of the training rows over the classes.
    let exact: Vec<f64> = classes.iter().map(|c| n_train as f64 * c.len() as f64 / n as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut short = n_train - take.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &c in order.iter().cycle().take(4) {
        if short == 0 {
            break;
        }
        if take[c] < classes[c].len() {
            take[c] += 1;
            short -= 1;
        }
    }

    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (c, idx) in classes.iter_mut().enumerate() {
        idx.shuffle(rng);
        train.extend_from_slice(&idx[..take[c]]);
        test.extend_from_slice(&idx[take[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}

/// Fold index for every sample; each class is shuffled and dealt round-robin
/// so every fold receives a near-equal share of both classes.
pub fn stratified_folds<R: Rng>(y: &[bool], k: usize, rng: &mut R) -> Vec<usize> {
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for mut idx in class_indices(y) {
        idx.shuffle(rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Linear,
    Gaussian,
    Polynomial2,
    Polynomial3,
    Polynomial4,
}

impl KernelFamily {
    pub fn with_scale(self, scale: f64) -> KernelSpec {
        match self {
            KernelFamily::Linear => KernelSpec::linear(scale),
            KernelFamily::Gaussian => KernelSpec::gaussian(scale),
            KernelFamily::Polynomial2 => KernelSpec::polynomial(2, scale),
            KernelFamily::Polynomial3 => KernelSpec::polynomial(3, scale),
            KernelFamily::Polynomial4 => KernelSpec::polynomial(4, scale),
        }
    }

    fn of(spec: &KernelSpec) -> KernelFamily {
        match spec.kind {
            KernelKind::Linear => KernelFamily::Linear,
            KernelKind::Gaussian => KernelFamily::Gaussian,
            KernelKind::Polynomial { degree: 2 } => KernelFamily::Polynomial2,
            KernelKind::Polynomial { degree: 3 } => KernelFamily::Polynomial3,
            KernelKind::Polynomial { .. } => KernelFamily::Polynomial4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kernel: KernelSpec,
    pub c: f64,
    pub normalize: bool,
}

impl GridPoint {
    /// Tie-break order: kernel family, then C, then scale, then
    /// normalisation off before on.
    fn order(&self, other: &GridPoint) -> std::cmp::Ordering {
        KernelFamily::of(&self.kernel)
            .cmp(&KernelFamily::of(&other.kernel))
            .then(self.c.total_cmp(&other.c))
            .then(self.kernel.scale.total_cmp(&other.kernel.scale))
            .then(self.normalize.cmp(&other.normalize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub c_values: Vec<f64>,
    pub scales: Vec<f64>,
    pub kernels: Vec<KernelFamily>,
    pub normalize: Vec<bool>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            c_values: vec![0.1, 1.0, 10.0, 100.0],
            scales: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            kernels: vec![
                KernelFamily::Linear,
                KernelFamily::Gaussian,
                KernelFamily::Polynomial2,
                KernelFamily::Polynomial3,
                KernelFamily::Polynomial4,
            ],
            normalize: vec![true, false],
        }
    }
}

impl HyperGrid {
    pub fn single(point: GridPoint) -> Self {
        Self {
            c_values: vec![point.c],
            scales: vec![point.kernel.scale],
            kernels: vec![KernelFamily::of(&point.kernel)],
            normalize: vec![point.normalize],
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if self.c_values.is_empty() || self.scales.is_empty() || self.kernels.is_empty() || self.normalize.is_empty() {
            return Err(SvmError::InvalidKernel("hyperparameter grid has an empty axis".into()));
        }
        if let Some(c) = self.c_values.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(SvmError::InvalidBoxConstraint(*c));
        }
        for s in &self.scales {
            KernelSpec::linear(*s).validate()?;
        }
        Ok(())
    }

    /// Every grid point, sorted by the tie-break order.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut pts = Vec::new();
        for &family in &self.kernels {
            for &scale in &self.scales {
                for &c in &self.c_values {
                    for &normalize in &self.normalize {
                        pts.push(GridPoint {
                            kernel: family.with_scale(scale),
                            c,
                            normalize,
                        });
                    }
                }
            }
        }
        pts.sort_by(|a, b| a.order(b));
        pts.dedup_by(|a, b| a.order(b).is_eq());
        pts
    }
}

/// Bookkeeping over every SVM fit made during a search.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitStats {
    /// Fits that converged and passed the KKT check.
    pub accepted: usize,
    /// Fits abandoned for exceeding the iteration budget or failing the KKT check.
    pub rejected: usize,
    /// Worst residuals among accepted fits.
    pub worst_kkt: KktReport,
}

impl FitStats {
    pub fn merge(&mut self, other: &FitStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.worst_kkt = self.worst_kkt.worst(other.worst_kkt);
    }

    pub(crate) fn accept(&mut self, kkt: KktReport) {
        self.accepted += 1;
        self.worst_kkt = self.worst_kkt.worst(kkt);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub cv_loss: f64,
    /// Folds actually used after shrinking K to the minority class size.
    pub folds: usize,
    /// Grid points for which every fold trained successfully.
    pub evaluated: usize,
    pub stats: FitStats,
}

/// Exhaustive grid search scored by mean held-out hinge loss over stratified
/// K-fold cross-validation.
pub fn grid_search_cv<R: Rng>(
    data: &Dataset,
    k: usize,
    grid: &HyperGrid,
    rng: &mut R,
    params: &SmoParams,
) -> Result<GridSearchResult, SvmError> {
    grid.validate()?;
    if !data.all_finite() {
        return Err(SvmError::NonFiniteFeature);
    }
    let (neg, pos) = data.class_counts();
    let k = k.min(neg.min(pos));
    if k < 2 {
        return Err(SvmError::DegenerateWindow(format!(
            "need at least 2 samples per class for cross-validation, have {neg} negative / {pos} positive"
        )));
    }

    let points = grid.points();
    let mut specs: Vec<KernelSpec> = Vec::new();
    for p in &points {
        if !specs.contains(&p.kernel) {
            specs.push(p.kernel);
        }
    }
    let folds = stratified_folds(&data.y, k, rng);
    let mut loss_sum = vec![0.0; points.len()];
    let mut failed = vec![false; points.len()];
    let mut stats = FitStats::default();

    for fold in 0..k {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != fold).collect();
        let val_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == fold).collect();
        let train = data.subset(&train_idx);
        let val = data.subset(&val_idx);
        let labels = train.signed_labels();
        if !train.has_both_classes() {
            failed.iter_mut().for_each(|f| *f = true);
            continue;
        }

        for &normalize in &grid.normalize {
            let norm = normalize.then(|| Normalization::fit(&train.x));
            let transform = |rows: &[[f64; 2]]| -> Vec<[f64; 2]> {
                match &norm {
                    Some(n) => rows.iter().map(|x| n.apply(x)).collect(),
                    None => rows.to_vec(),
                }
            };
            let xt = transform(&train.x);
            let xv = transform(&val.x);

            // One Gram matrix per (kernel, scale), shared by every C.
            for spec in &specs {
                let members: Vec<usize> = (0..points.len())
                    .filter(|&p| points[p].kernel == *spec && points[p].normalize == normalize && !failed[p])
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let spec = *spec;
                let gram = spec.gram(&xt);
                for p in members {
                    match fit_with_gram(&xt, &labels, &gram, spec, points[p].c, None, params) {
                        Ok(fit) => {
                            stats.accept(fit.kkt);
                            let f: Vec<f64> = xv.iter().map(|x| fit.model.decision_function(x)).collect();
                            loss_sum[p] += mean_hinge(&f, &val.y);
                        }
                        Err(SvmError::NotConverged { .. }) | Err(SvmError::KktViolation(_)) => {
                            stats.rejected += 1;
                            failed[p] = true;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }

    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0;
    for (p, sum) in loss_sum.iter().enumerate() {
        if failed[p] {
            continue;
        }
        evaluated += 1;
        let loss = sum / k as f64;
        match best {
            Some((_, b)) if loss >= b => {}
            _ => best = Some((p, loss)),
        }
    }
    let (p, cv_loss) =
        best.ok_or_else(|| SvmError::DegenerateWindow("no grid point trained on every fold".into()))?;
    Ok(GridSearchResult {
        best: points[p],
        cv_loss,
        folds: k,
        evaluated,
        stats,
    })
}
