//! Configuration, the TTI loop, A/B execution and output files.

mod config;
mod output;
mod sim;

use std::time::Instant;

use serde::Serialize;

pub use config::{
    parse_cli, Cli, ConfigFile, ControlMode, Mode, RunConfig, Stream2Resources, DEFAULT_CQI_DELAY_TTIS,
    DEFAULT_SNR_LOSS_DB,
};
pub use output::{read_per_ue_csv, write_outputs, Manifest};
pub use sim::{simulate, ChannelTrace, ModeOutcome, Network};

use crate::error::Result;
use crate::geometry::CellKind;
use crate::metrics::{compare_runs, Comparison};

#[derive(Debug, Clone, Serialize)]
pub struct NetworkSummary {
    pub n_cells: usize,
    pub n_macro_sectors: usize,
    pub n_picos: usize,
    pub n_ues: usize,
    pub macro_served_ues: usize,
    pub pico_served_ues: usize,
}

impl NetworkSummary {
    pub fn of(net: &Network) -> Self {
        let served = |k| (0..net.ues.len()).filter(|&u| net.serving_kind(u) == k).count();
        Self {
            n_cells: net.scenario.cells.len(),
            n_macro_sectors: net.scenario.count(CellKind::MacroSector),
            n_picos: net.scenario.count(CellKind::Pico),
            n_ues: net.ues.len(),
            macro_served_ues: served(CellKind::MacroSector),
            pico_served_ues: served(CellKind::Pico),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub network: NetworkSummary,
    pub modes: Vec<ModeOutcome>,
    pub comparison: Option<Comparison>,
    pub wall_clock_s: f64,
}

impl RunOutcome {
    pub fn mode(&self, mode: ControlMode) -> Option<&ModeOutcome> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Runs every requested controller on the same network and channel,
/// without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let net = Network::build(cfg)?;
    let channel = ChannelTrace::build(&net, cfg);
    let modes = cfg
        .mode
        .control_modes()
        .into_iter()
        .map(|m| simulate(&net, &channel, cfg, m))
        .collect::<Result<Vec<_>>>()?;
    let comparison = match (modes.iter().find(|m| m.mode == ControlMode::Baseline), modes.iter().find(|m| m.mode == ControlMode::Dynamic)) {
        (Some(b), Some(d)) => Some(compare_runs(&b.summary, &d.summary)?),
        _ => None,
    };
    Ok(RunOutcome {
        config: cfg.clone(),
        network: NetworkSummary::of(&net),
        modes,
        comparison,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Executes the run and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    write_outputs(&outcome, &cfg.out)?;
    Ok(outcome)
}
