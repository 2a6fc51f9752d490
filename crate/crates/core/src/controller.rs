//! Cluster-wide CoMP triggering: windowed report collection, the static
//! SINR-threshold rule, and the SVM gate that may override it.
//!
//! One decision covers every UE in the cooperating set for `t_comp`
//! consecutive TTIs. The first window runs under the static rule while the
//! first batch of reports accumulates; afterwards the decision for window
//! `w` is trained on the reports of window `w − 1`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{Cqi, HARQ_BLER_TARGET};
use crate::propagation::LinkTable;
use crate::rng;
use crate::svm::{
    grid_search_cv, misclassification_error, split_train_test, train, Dataset, FitStats, GridPoint, HyperGrid,
    SmoParams, SvmError, SvmModel,
};

/// One UE's report for one TTI: the ML training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeReport {
    pub tti: usize,
    pub ue_id: usize,
    /// CQI the transmission in this TTI was adapted to.
    pub cqi: Cqi,
    pub rsrp_dbm: f64,
    /// Effective wideband SNR of the serving stream.
    pub wideband_snr_db: f64,
    pub bler_observed: f64,
    /// Whether the HARQ target was met.
    pub label: bool,
}

impl UeReport {
    pub fn new(tti: usize, ue_id: usize, cqi: Cqi, rsrp_dbm: f64, wideband_snr_db: f64, bler_observed: f64) -> Self {
        Self {
            tti,
            ue_id,
            cqi,
            rsrp_dbm,
            wideband_snr_db,
            bler_observed,
            label: bler_observed <= HARQ_BLER_TARGET,
        }
    }
}

/// Feature matrix `(CQI, RSRP)` and labels from the reports of TTIs
/// `first_tti .. first_tti + t_comp`, in report order.
pub fn collect_window(reports: &[UeReport], first_tti: usize, t_comp: usize) -> Result<Dataset> {
    if t_comp == 0 {
        return Err(Error::invalid("t_comp", "must be at least 1"));
    }
    let window = first_tti..first_tti + t_comp;
    let (x, y): (Vec<[f64; 2]>, Vec<bool>) = reports
        .iter()
        .filter(|r| window.contains(&r.tti))
        .map(|r| ([r.cqi.get() as f64, r.rsrp_dbm], r.label))
        .unzip();
    if x.is_empty() {
        return Err(Error::EmptyReports);
    }
    Ok(Dataset { x, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    MlOverride,
    BaselineRule,
    DegenerateFallback,
}

impl DecisionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionSource::MlOverride => "ml_override",
            DecisionSource::BaselineRule => "baseline_rule",
            DecisionSource::DegenerateFallback => "degenerate_fallback",
        }
    }
}

impl std::str::FromStr for DecisionSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml_override" => Ok(DecisionSource::MlOverride),
            "baseline_rule" => Ok(DecisionSource::BaselineRule),
            "degenerate_fallback" => Ok(DecisionSource::DegenerateFallback),
            other => Err(Error::invalid("source", format!("unknown decision source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompDecision {
    pub window_index: usize,
    pub enabled: bool,
    pub source: DecisionSource,
    /// Test misclassification error of the window's classifier, when one was trained.
    pub err: Option<f64>,
}

/// How per-UE SNRs are reduced to the single cluster-wide baseline state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineAggregation {
    #[default]
    Median,
    Mean,
    /// At least half of the UEs at or above the threshold.
    FractionAbove,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The static trigger: CoMP on when the aggregated wideband SNR reaches
/// `sinr_min_db`.
pub fn baseline_rule(ue_snrs_db: &[f64], sinr_min_db: f64, aggregation: BaselineAggregation) -> Result<bool> {
    if ue_snrs_db.is_empty() {
        return Err(Error::EmptySnrList);
    }
    Ok(match aggregation {
        BaselineAggregation::Median => median(ue_snrs_db) >= sinr_min_db,
        BaselineAggregation::Mean => ue_snrs_db.iter().sum::<f64>() / ue_snrs_db.len() as f64 >= sinr_min_db,
        BaselineAggregation::FractionAbove => {
            let above = ue_snrs_db.iter().filter(|&&s| s >= sinr_min_db).count();
            2 * above >= ue_snrs_db.len()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlGateConfig {
    pub epsilon: f64,
    pub r_train: f64,
    pub cv_k: usize,
    pub grid: HyperGrid,
    pub smo: SmoParams,
    /// Root seed for the split and fold substreams.
    pub seed: u64,
}

/// What the SVM gate did in one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    pub window_index: usize,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub best: Option<GridPoint>,
    pub cv_loss: Option<f64>,
    pub err: Option<f64>,
    pub fallback_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<SvmModel>,
}

#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub decision: CompDecision,
    pub selection: WindowSelection,
    pub stats: FitStats,
}

struct Trained {
    n_train: usize,
    n_test: usize,
    best: GridPoint,
    cv_loss: f64,
    err: f64,
    model: SvmModel,
}

fn run_gate(window_index: usize, data: &Dataset, cfg: &MlGateConfig, stats: &mut FitStats) -> Result<Trained, SvmError> {
    if !data.has_both_classes() {
        return Err(SvmError::DegenerateWindow("window has a single class".into()));
    }
    let w = window_index as u64;
    let (train_set, test_set) = split_train_test(data, cfg.r_train, &mut rng::substream(cfg.seed, "split", &[w]))?;
    let search = grid_search_cv(
        &train_set,
        cfg.cv_k,
        &cfg.grid,
        &mut rng::substream(cfg.seed, "cv-folds", &[w]),
        &cfg.smo,
    )?;
    stats.merge(&search.stats);
    let best = search.best;
    let fit = match train(&train_set, best.kernel, best.c, best.normalize, &cfg.smo) {
        Ok(fit) => fit,
        Err(e) => {
            stats.rejected += 1;
            return Err(e);
        }
    };
    stats.accept(fit.kkt);
    let predicted = fit.model.predict_all(&test_set.x);
    let err = misclassification_error(&predicted, &test_set.y)?;
    Ok(Trained {
        n_train: train_set.len(),
        n_test: test_set.len(),
        best,
        cv_loss: search.cv_loss,
        err,
        model: fit.model,
    })
}

/// Split, cross-validated grid search, final training and test error; CoMP
/// is forced on when the error is within `epsilon`, otherwise the static
/// rule's verdict `baseline_enabled` stands. Degenerate windows fall back to
/// the static rule.
pub fn decide(window_index: usize, data: &Dataset, cfg: &MlGateConfig, baseline_enabled: bool) -> GateOutcome {
    let mut stats = FitStats::default();
    let mut selection = WindowSelection {
        window_index,
        n_rows: data.len(),
        n_train: 0,
        n_test: 0,
        best: None,
        cv_loss: None,
        err: None,
        fallback_reason: None,
        model: None,
    };
    let decision = match run_gate(window_index, data, cfg, &mut stats) {
        Ok(t) => {
            selection.n_train = t.n_train;
            selection.n_test = t.n_test;
            selection.best = Some(t.best);
            selection.cv_loss = Some(t.cv_loss);
            selection.err = Some(t.err);
            selection.model = Some(t.model);
            if t.err <= cfg.epsilon {
                CompDecision {
                    window_index,
                    enabled: true,
                    source: DecisionSource::MlOverride,
                    err: Some(t.err),
                }
            } else {
                CompDecision {
                    window_index,
                    enabled: baseline_enabled,
                    source: DecisionSource::BaselineRule,
                    err: Some(t.err),
                }
            }
        }
        Err(e) => {
            selection.fallback_reason = Some(e.to_string());
            CompDecision {
                window_index,
                enabled: baseline_enabled,
                source: DecisionSource::DegenerateFallback,
                err: None,
            }
        }
    };
    GateOutcome {
        decision,
        selection,
        stats,
    }
}

/// The TTIs a decision governs: its own TTI plus `t_comp − 1` more.
pub fn apply_decision(decision: &CompDecision, t_comp: usize) -> std::ops::Range<usize> {
    let first = decision.window_index * t_comp;
    first..first + t_comp
}

/// Transmitting cells for a UE: the serving cell, plus the strongest other
/// cell of the cooperating set when CoMP is on.
pub fn comp_links(links: &LinkTable, cooperating_set: &[usize], ue_id: usize, serving: usize, enabled: bool) -> Vec<usize> {
    let mut cells = vec![serving];
    if enabled {
        if let Some(partner) = links.strongest_other(ue_id, serving, cooperating_set) {
            cells.push(partner);
        }
    }
    cells
}

/// One row of `comp_trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tti: usize,
    pub state: u8,
    pub source: DecisionSource,
    pub err: Option<f64>,
}

pub const TRACE_HEADER: [&str; 4] = ["tti", "state", "source", "err"];

pub fn write_comp_trace<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        let err = r.err.map(|e| format!("{e}")).unwrap_or_default();
        w.write_record([r.tti.to_string(), r.state.to_string(), r.source.as_str().to_string(), err])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `comp_trace.csv`, rejecting anything that does not match the
/// emitted schema.
pub fn read_comp_trace<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::MalformedTrace {
            row: 0,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let bad = |reason: String| Error::MalformedTrace { row, reason };
        let rec = rec?;
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", rec.len())));
        }
        let tti = rec[0].parse::<usize>().map_err(|e| bad(format!("tti: {e}")))?;
        let state = match &rec[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("state must be 0 or 1, got {other:?}"))),
        };
        let source = rec[2].parse::<DecisionSource>().map_err(|e| bad(e.to_string()))?;
        let err = if rec[3].is_empty() {
            None
        } else {
            let e = rec[3].parse::<f64>().map_err(|e| bad(format!("err: {e}")))?;
            if !(0.0..=1.0).contains(&e) {
                return Err(bad(format!("err {e} outside [0, 1]")));
            }
            Some(e)
        };
        rows.push(TraceRow { tti, state, source, err });
    }
    Ok(rows)
}

/// Checks that a trace tiles the timeline from TTI 0 with decisions that
/// hold for exactly `t_comp` TTIs (the last window may be cut short by the
/// end of the run). Returns the number of windows.
pub fn verify_cadence(rows: &[TraceRow], t_comp: usize) -> Result<usize> {
    if t_comp == 0 {
        return Err(Error::invalid("t_comp", "must be at least 1"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.tti != i {
            return Err(Error::MalformedTrace {
                row: i + 1,
                reason: format!("expected tti {i}, got {}", r.tti),
            });
        }
    }
    for chunk in rows.chunks(t_comp) {
        let first = chunk[0];
        if let Some(r) = chunk.iter().find(|r| r.state != first.state || r.source != first.source || r.err != first.err) {
            return Err(Error::MalformedTrace {
                row: r.tti + 1,
                reason: format!("decision changed inside the window starting at tti {}", first.tti),
            });
        }
    }
    Ok(rows.len().div_ceil(t_comp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::KernelSpec;

    fn report(tti: usize, ue: usize, cqi: i64, rsrp: f64, bler: f64) -> UeReport {
        UeReport::new(tti, ue, Cqi::new(cqi).unwrap(), rsrp, 0.0, bler)
    }

    #[test]
    fn label_follows_harq_target() {
        assert!(report(0, 0, 5, -70.0, 0.1).label);
        assert!(!report(0, 0, 5, -70.0, 0.1000001).label);
    }

    #[test]
    fn window_row_counts() {
        let mut reports = Vec::new();
        for tti in 0..6 {
            for ue in 0..60 {
                reports.push(report(tti, ue, 4, -70.0, 0.05));
            }
        }
        assert_eq!(collect_window(&reports, 3, 3).unwrap().len(), 180);
        assert_eq!(collect_window(&reports[..1], 0, 1).unwrap().len(), 1);
        assert!(matches!(collect_window(&reports, 10, 3), Err(Error::EmptyReports)));
        assert!(collect_window(&reports, 0, 0).is_err());
        let d = collect_window(&[report(0, 0, 7, -81.5, 0.5)], 0, 1).unwrap();
        assert_eq!(d.x, vec![[7.0, -81.5]]);
        assert_eq!(d.y, vec![false]);
    }

    #[test]
    fn baseline_rule_cases() {
        let m = BaselineAggregation::Median;
        assert!(baseline_rule(&[10.0; 5], 3.0, m).unwrap());
        assert!(!baseline_rule(&[0.0; 5], 3.0, m).unwrap());
        assert!(!baseline_rule(&[2.0, 2.0, 4.0], 3.0, m).unwrap());
        assert!(baseline_rule(&[2.0, 4.0, 4.0], 3.0, m).unwrap());
        assert!(matches!(baseline_rule(&[], 3.0, m), Err(Error::EmptySnrList)));
        assert!(baseline_rule(&[2.0, 2.0, 6.0], 3.0, BaselineAggregation::Mean).unwrap());
        assert!(!baseline_rule(&[2.0, 2.0, 6.0], 3.0, BaselineAggregation::FractionAbove).unwrap());
    }

    fn gate(epsilon: f64) -> MlGateConfig {
        MlGateConfig {
            epsilon,
            r_train: 0.7,
            cv_k: 5,
            grid: HyperGrid::single(GridPoint {
                kernel: KernelSpec::linear(1.0),
                c: 1.0,
                normalize: true,
            }),
            smo: SmoParams::default(),
            seed: 0,
        }
    }

    /// Labels determined by CQI alone, so the window is perfectly learnable.
    fn separable_window() -> Dataset {
        let x = (0..60).map(|i| [(1 + i % 15) as f64, -60.0 - (i % 7) as f64]).collect();
        let y = (0..60).map(|i| 1 + i % 15 >= 8).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn learnable_window_overrides() {
        let out = decide(4, &separable_window(), &gate(0.12), false);
        assert_eq!(out.decision.source, DecisionSource::MlOverride);
        assert!(out.decision.enabled);
        assert!(out.decision.err.unwrap() <= 0.12);
        assert_eq!(out.selection.n_train, 42);
        assert_eq!(out.selection.n_test, 18);
    }

    #[test]
    fn unlearnable_window_keeps_baseline() {
        // labels alternate on identical features: no classifier beats 50 %
        let x = vec![[5.0, -70.0]; 40];
        let y = (0..40).map(|i| i % 2 == 0).collect();
        let d = Dataset::new(x, y).unwrap();
        for baseline in [true, false] {
            let out = decide(1, &d, &gate(0.12), baseline);
            assert_eq!(out.decision.source, DecisionSource::BaselineRule);
            assert_eq!(out.decision.enabled, baseline);
            assert!(out.decision.err.unwrap() > 0.12);
        }
    }

    #[test]
    fn single_class_window_falls_back() {
        let d = Dataset::new(vec![[5.0, -70.0]; 30], vec![true; 30]).unwrap();
        let out = decide(2, &d, &gate(0.12), true);
        assert_eq!(out.decision.source, DecisionSource::DegenerateFallback);
        assert!(out.decision.enabled);
        assert!(out.decision.err.is_none());
        assert!(out.selection.fallback_reason.is_some());
    }

    #[test]
    fn zero_epsilon_needs_a_perfect_window() {
        let out = decide(1, &separable_window(), &gate(0.0), false);
        match out.decision.err {
            Some(e) if e > 0.0 => assert_eq!(out.decision.source, DecisionSource::BaselineRule),
            _ => assert_eq!(out.decision.source, DecisionSource::MlOverride),
        }
    }

    #[test]
    fn decision_spans() {
        let d = CompDecision {
            window_index: 4,
            enabled: true,
            source: DecisionSource::BaselineRule,
            err: None,
        };
        assert_eq!(apply_decision(&d, 3), 12..15);
    }

    #[test]
    fn trace_roundtrip_and_cadence() {
        let mut rows = Vec::new();
        for tti in 0..60 {
            let w = tti / 3;
            rows.push(TraceRow {
                tti,
                state: (w % 2) as u8,
                source: if w == 0 { DecisionSource::BaselineRule } else { DecisionSource::MlOverride },
                err: (w > 0).then_some(0.05),
            });
        }
        let mut buf = Vec::new();
        write_comp_trace(&mut buf, &rows).unwrap();
        let back = read_comp_trace(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(verify_cadence(&back, 3).unwrap(), 20);

        rows[4].state = 1 - rows[4].state;
        assert!(verify_cadence(&rows, 3).is_err());
    }

    #[test]
    fn trace_reader_rejects_garbage() {
        assert!(read_comp_trace("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_comp_trace("tti,state,source,err\n0,2,ml_override,\n".as_bytes()).is_err());
        assert!(read_comp_trace("tti,state,source,err\n0,1,magic,\n".as_bytes()).is_err());
        assert!(read_comp_trace("tti,state,source,err\n0,1,ml_override,1.5\n".as_bytes()).is_err());
        assert!(read_comp_trace("tti,state,source,err\n0,1,ml_override,0.5,9\n".as_bytes()).is_err());
    }
}
