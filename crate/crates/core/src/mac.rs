//! Proportional-fair PRB allocation for full-buffer UEs and conversion of
//! grants into delivered bits.

use serde::{Deserialize, Serialize};

use crate::link::{Cqi, CqiTable};
use crate::propagation::N_PRB;

/// Data resource elements per PRB per TTI after control and reference
/// signal overhead.
pub const DATA_RES_PER_PRB: f64 = 120.0;
pub const PF_WINDOW_TTIS: f64 = 20.0;

/// PRB → UE map of one cell for one TTI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub tti: usize,
    pub cell_id: usize,
    pub prbs: Vec<Option<usize>>,
}

impl Allocation {
    pub fn empty(tti: usize, cell_id: usize) -> Self {
        Self {
            tti,
            cell_id,
            prbs: vec![None; N_PRB],
        }
    }

    pub fn prbs_for(&self, ue_id: usize) -> usize {
        self.prbs.iter().filter(|p| **p == Some(ue_id)).count()
    }

    pub fn assigned(&self) -> usize {
        self.prbs.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned() == 0
    }

    /// (ue, PRB count) pairs in ascending UE order.
    pub fn grants(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for ue in self.prbs.iter().flatten() {
            match out.iter_mut().find(|(u, _)| u == ue) {
                Some((_, n)) => *n += 1,
                None => out.push((*ue, 1)),
            }
        }
        out.sort_unstable();
        out
    }
}

/// Per-UE delivered bits and the PF moving average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputLedger {
    window: f64,
    cumulative_bits: Vec<f64>,
    r_avg: Vec<Option<f64>>,
    tti_bits: Vec<f64>,
}

impl ThroughputLedger {
    pub fn new(n_ues: usize) -> Self {
        Self::with_window(n_ues, PF_WINDOW_TTIS)
    }

    pub fn with_window(n_ues: usize, window: f64) -> Self {
        Self {
            window,
            cumulative_bits: vec![0.0; n_ues],
            r_avg: vec![None; n_ues],
            tti_bits: vec![0.0; n_ues],
        }
    }

    pub fn cumulative_bits(&self, ue: usize) -> f64 {
        self.cumulative_bits[ue]
    }

    pub fn all_cumulative_bits(&self) -> &[f64] {
        &self.cumulative_bits
    }

    /// Bits delivered so far in the current TTI.
    pub fn tti_bits(&self, ue: usize) -> f64 {
        self.tti_bits[ue]
    }

    /// Averaged rate, or `None` before the UE's first TTI.
    pub fn average_rate(&self, ue: usize) -> Option<f64> {
        self.r_avg[ue]
    }

    /// PF metric. A UE without history uses its instantaneous rate as the
    /// average.
    pub fn pf_metric(&self, ue: usize, r_inst: f64) -> f64 {
        r_inst / self.r_avg[ue].unwrap_or(r_inst)
    }

    pub fn record(&mut self, ue: usize, bits: f64) {
        debug_assert!(bits >= 0.0);
        self.tti_bits[ue] += bits;
        self.cumulative_bits[ue] += bits;
    }

    /// Closes the TTI: `r_avg ← (1 − 1/W)·r_avg + r_tti/W`, with never-seen
    /// UEs first initialised to `r_inst`.
    pub fn end_tti(&mut self, r_inst: &[f64]) {
        let a = 1.0 / self.window;
        for ue in 0..self.r_avg.len() {
            let prev = self.r_avg[ue].unwrap_or(r_inst[ue]);
            self.r_avg[ue] = Some((1.0 - a) * prev + a * self.tti_bits[ue]);
            self.tti_bits[ue] = 0.0;
        }
    }
}

/// Bits a UE could receive this TTI over all PRBs of a cell at `cqi`.
pub fn full_band_rate(table: &CqiTable, cqi: Cqi) -> f64 {
    N_PRB as f64 * DATA_RES_PER_PRB * table.efficiency(cqi)
}

/// Assigns every PRB of a cell to the candidate with the largest
/// `r_inst / r_avg`, lowest UE id on ties. `candidates` holds
/// `(ue_id, r_inst)` with `r_inst > 0`.
pub fn pf_schedule(tti: usize, cell_id: usize, candidates: &[(usize, f64)], ledger: &ThroughputLedger) -> Allocation {
    let mut alloc = Allocation::empty(tti, cell_id);
    // Wideband CQI: every PRB carries the same metric, so one winner per TTI.
    let mut best: Option<(usize, f64)> = None;
    for &(ue, r_inst) in candidates {
        debug_assert!(r_inst > 0.0);
        let m = ledger.pf_metric(ue, r_inst);
        match best {
            Some((bu, bm)) if m < bm || (m == bm && ue > bu) => {}
            _ => best = Some((ue, m)),
        }
    }
    if let Some((ue, _)) = best {
        alloc.prbs.iter_mut().for_each(|p| *p = Some(ue));
    }
    alloc
}

/// One spatial stream's share of a transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamGrant {
    pub prbs: usize,
    pub cqi: Cqi,
    pub bler: f64,
}

/// Expected goodput in bits: Σ PRBs × 120 × efficiency × (1 − BLER).
pub fn deliver(table: &CqiTable, streams: &[StreamGrant]) -> f64 {
    streams
        .iter()
        .map(|s| s.prbs as f64 * DATA_RES_PER_PRB * table.efficiency(s.cqi) * (1.0 - s.bler))
        .sum()
}
