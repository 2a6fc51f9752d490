//! The TTI loop.
//!
//! Everything random (layout, shadowing, fading) is drawn before either
//! controller runs, so the baseline and dynamic runs of one seed see the
//! same channel sample path by construction.

use serde::Serialize;

use crate::controller::{
    baseline_rule, collect_window, decide, CompDecision, DecisionSource, MlGateConfig, TraceRow, UeReport,
    WindowSelection,
};
use crate::error::Result;
use crate::geometry::{build_scenario, drop_ues, CellKind, Scenario, UserEquipment};
use crate::link::{Cqi, CqiTable, FadingProcess, FADING_RHO, FADING_SIGMA_DB};
use crate::mac::{deliver, full_band_rate, pf_schedule, StreamGrant, ThroughputLedger};
use crate::metrics::{aggregate, BlockRecord, KpiSummary, RunLog, UeStats};
use crate::propagation::{LinkTable, N_PRB};
use crate::rng;
use crate::svm::FitStats;

use super::config::{ControlMode, RunConfig, Stream2Resources};

/// Static part of a run: cells, UEs and their long-term links.
#[derive(Debug, Clone)]
pub struct Network {
    pub scenario: Scenario,
    pub ues: Vec<UserEquipment>,
    pub links: LinkTable,
    /// Stream-2 cell of each UE: strongest non-serving cell of the
    /// cooperating set.
    pub partners: Vec<Option<usize>>,
}

impl Network {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let scenario = build_scenario(cfg.scenario, cfg.seed);
        let ues = drop_ues(&scenario, cfg.ues, cfg.seed)?;
        let links = LinkTable::build(&scenario, &ues, cfg.seed);
        let partners = ues
            .iter()
            .map(|u| links.strongest_other(u.id, u.serving_cell, &scenario.cooperating_set))
            .collect();
        Ok(Self {
            scenario,
            ues,
            links,
            partners,
        })
    }

    pub fn serving_kind(&self, ue: usize) -> CellKind {
        self.scenario.cell(self.ues[ue].serving_cell).kind
    }

    /// Cell of stream `s` (0 = serving, 1 = CoMP partner).
    pub fn stream_cell(&self, ue: usize, s: usize) -> Option<usize> {
        match s {
            0 => Some(self.ues[ue].serving_cell),
            _ => self.partners[ue],
        }
    }
}

/// Effective per-stream SNR of every UE at every TTI: budget SNR minus the
/// implementation loss plus the AR(1) fading offset.
#[derive(Debug, Clone)]
pub struct ChannelTrace {
    n_ues: usize,
    snr_db: Vec<[f64; 2]>,
}

impl ChannelTrace {
    pub fn build(net: &Network, cfg: &RunConfig) -> Self {
        let n_ues = net.ues.len();
        let mut snr_db = vec![[f64::NEG_INFINITY; 2]; cfg.ttis * n_ues];
        for ue in 0..n_ues {
            for s in 0..2 {
                let Some(cell) = net.stream_cell(ue, s) else { continue };
                let budget = net.links.get(cell, ue).wideband_snr_db - cfg.snr_loss;
                let rng = rng::substream(cfg.seed, "fading", &[ue as u64, s as u64]);
                let mut fading = FadingProcess::new(FADING_RHO, FADING_SIGMA_DB, rng);
                for tti in 0..cfg.ttis {
                    let offset = if tti == 0 { fading.offset_db() } else { fading.fade_step() };
                    snr_db[tti * n_ues + ue][s] = budget + offset;
                }
            }
        }
        Self { n_ues, snr_db }
    }

    pub fn snr(&self, tti: usize, ue: usize, stream: usize) -> f64 {
        self.snr_db[tti * self.n_ues + ue][stream]
    }

    /// CQI governing TTI `tti`: the report from `delay` TTIs earlier, or
    /// the first report while none that old exists yet.
    pub fn applied_cqi(&self, table: &CqiTable, tti: usize, ue: usize, stream: usize, delay: usize) -> Cqi {
        table.snr_to_cqi(self.snr(tti.saturating_sub(delay), ue, stream))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeOutcome {
    pub mode: ControlMode,
    pub summary: KpiSummary,
    #[serde(skip)]
    pub per_ue: Vec<UeStats>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub reports: Vec<UeReport>,
    pub decisions: Vec<CompDecision>,
    pub selections: Vec<WindowSelection>,
    pub fit_stats: FitStats,
    pub comp_on_ttis: usize,
}

fn gate_config(cfg: &RunConfig) -> MlGateConfig {
    MlGateConfig {
        epsilon: cfg.epsilon,
        r_train: cfg.r_train,
        cv_k: cfg.cv_k,
        grid: cfg.grid.clone(),
        smo: cfg.smo,
        seed: cfg.seed,
    }
}

/// Runs the TTI loop under one controller.
pub fn simulate(net: &Network, channel: &ChannelTrace, cfg: &RunConfig, mode: ControlMode) -> Result<ModeOutcome> {
    let table = CqiTable::default();
    let gate = gate_config(cfg);
    let n_ues = net.ues.len();
    let mut ledger = ThroughputLedger::new(n_ues);
    let mut reports: Vec<UeReport> = Vec::with_capacity(cfg.ttis * n_ues);
    let mut blocks = Vec::new();
    let mut trace = Vec::with_capacity(cfg.ttis);
    let mut decisions = Vec::new();
    let mut selections = Vec::new();
    let mut fit_stats = FitStats::default();
    let mut comp_on_ttis = 0;
    let mut current: Option<CompDecision> = None;

    for tti in 0..cfg.ttis {
        let cqi: Vec<[Cqi; 2]> = (0..n_ues)
            .map(|ue| {
                let c = |s| channel.applied_cqi(&table, tti, ue, s, cfg.cqi_delay);
                [c(0), c(1)]
            })
            .collect();

        if tti % cfg.t_comp == 0 {
            let w = tti / cfg.t_comp;
            let reported = tti.saturating_sub(cfg.cqi_delay);
            let snrs: Vec<f64> = (0..n_ues).map(|ue| channel.snr(reported, ue, 0)).collect();
            let baseline = baseline_rule(&snrs, cfg.sinr_min, cfg.baseline_aggregation)?;
            let decision = match mode {
                ControlMode::Dynamic if w > 0 => {
                    let data = collect_window(&reports, (w - 1) * cfg.t_comp, cfg.t_comp)?;
                    let mut out = decide(w, &data, &gate, baseline);
                    fit_stats.merge(&out.stats);
                    if !cfg.dump_models {
                        out.selection.model = None;
                    }
                    selections.push(out.selection);
                    out.decision
                }
                _ => CompDecision {
                    window_index: w,
                    enabled: baseline,
                    source: DecisionSource::BaselineRule,
                    err: None,
                },
            };
            decisions.push(decision);
            current = Some(decision);
        }
        let decision = current.expect("a decision is made at tti 0");
        trace.push(TraceRow {
            tti,
            state: decision.enabled as u8,
            source: decision.source,
            err: decision.err,
        });
        comp_on_ttis += decision.enabled as usize;

        // PRBs per UE and stream
        let mut prbs = vec![[0usize; 2]; n_ues];
        let r_inst: Vec<f64> = cqi.iter().map(|c| full_band_rate(&table, c[0])).collect();
        for &cell in &net.scenario.cooperating_set {
            let cands: Vec<(usize, f64)> =
                (0..n_ues).filter(|&u| net.ues[u].serving_cell == cell).map(|u| (u, r_inst[u])).collect();
            for (ue, n) in pf_schedule(tti, cell, &cands, &ledger).grants() {
                prbs[ue][0] = n;
            }
        }
        if decision.enabled {
            match cfg.stream2 {
                Stream2Resources::CooperatingCellPf => {
                    for &cell in &net.scenario.cooperating_set {
                        let cands: Vec<(usize, f64)> = (0..n_ues)
                            .filter(|&u| net.partners[u] == Some(cell))
                            .map(|u| (u, full_band_rate(&table, cqi[u][1])))
                            .collect();
                        for (ue, n) in pf_schedule(tti, cell, &cands, &ledger).grants() {
                            prbs[ue][1] = n;
                        }
                    }
                }
                Stream2Resources::ServingPrbs => {
                    for (ue, p) in prbs.iter_mut().enumerate() {
                        if net.partners[ue].is_some() {
                            p[1] = p[0];
                        }
                    }
                }
            }
        }

        for ue in 0..n_ues {
            let mut grants = Vec::with_capacity(2);
            for s in 0..2 {
                if prbs[ue][s] > 0 {
                    debug_assert!(prbs[ue][s] <= N_PRB);
                    grants.push(StreamGrant {
                        prbs: prbs[ue][s],
                        cqi: cqi[ue][s],
                        bler: table.bler(channel.snr(tti, ue, s), cqi[ue][s]),
                    });
                }
            }
            for g in &grants {
                blocks.push(BlockRecord { tti, ue_id: ue, bler: g.bler });
            }
            ledger.record(ue, deliver(&table, &grants));
            let bler_observed = if grants.is_empty() {
                table.bler(channel.snr(tti, ue, 0), cqi[ue][0])
            } else {
                grants.iter().map(|g| g.bler).sum::<f64>() / grants.len() as f64
            };
            let serving = net.ues[ue].serving_cell;
            reports.push(UeReport::new(
                tti,
                ue,
                cqi[ue][0],
                net.links.get(serving, ue).rsrp_dbm,
                channel.snr(tti, ue, 0),
                bler_observed,
            ));
        }
        ledger.end_tti(&r_inst);
    }

    let log = RunLog {
        n_ttis: cfg.ttis,
        grouping: (0..n_ues).map(|u| net.serving_kind(u)).collect(),
        cumulative_bits: ledger.all_cumulative_bits().to_vec(),
        reports,
        blocks,
    };
    let (summary, per_ue) = aggregate(&log, cfg.scenario, cfg.seed, mode.as_str())?;
    Ok(ModeOutcome {
        mode,
        summary,
        per_ue,
        trace,
        reports: log.reports,
        decisions,
        selections,
        fit_stats,
        comp_on_ttis,
    })
}
