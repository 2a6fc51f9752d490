use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::controller::write_comp_trace;
use crate::error::{Error, Result};
use crate::geometry::CellKind;
use crate::link::CqiTable;
use crate::metrics::{write_kpis_csv, write_per_ue_csv, Comparison, KpiSummary, UeStats, PER_UE_CSV_HEADER};
use crate::svm::HyperGrid;

use super::config::RunConfig;
use super::sim::ModeOutcome;
use super::{NetworkSummary, RunOutcome};

/// Everything needed to rerun and audit a run. Wall-clock time goes to
/// `timing.json` so that reruns stay byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub cqi_table: CqiTable,
    pub grid: &'a HyperGrid,
    pub grid_points: usize,
    pub network: &'a NetworkSummary,
    pub modes: &'a [ModeOutcome],
}

#[derive(Serialize)]
struct KpiFile<'a> {
    summaries: Vec<&'a KpiSummary>,
    comparison: &'a Option<Comparison>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cfg = &outcome.config;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            cqi_table: CqiTable::default(),
            grid: &cfg.grid,
            grid_points: cfg.grid.points().len(),
            network: &outcome.network,
            modes: &outcome.modes,
        },
    )?;
    write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_clock_s": outcome.wall_clock_s }))?;
    write_json(
        &dir.join("kpis.json"),
        &KpiFile {
            summaries: outcome.modes.iter().map(|m| &m.summary).collect(),
            comparison: &outcome.comparison,
        },
    )?;
    let summaries: Vec<KpiSummary> = outcome.modes.iter().map(|m| m.summary.clone()).collect();
    write_kpis_csv(create(&dir.join("kpis.csv"))?, &summaries)?;

    for m in &outcome.modes {
        let sub = dir.join(m.mode.as_str());
        fs::create_dir_all(&sub)?;
        write_per_ue_csv(create(&sub.join("per_ue.csv"))?, &m.per_ue)?;
        write_comp_trace(create(&sub.join("comp_trace.csv"))?, &m.trace)?;
    }

    // CQI reports do not depend on the controller, so any mode will do.
    if let Some(m) = outcome.modes.first() {
        let mut w = csv::Writer::from_writer(create(&dir.join("plotdata_snr_cqi.csv"))?);
        w.write_record(["tti", "ue_id", "snr_db", "cqi"])?;
        for r in &m.reports {
            w.write_record([r.tti.to_string(), r.ue_id.to_string(), format!("{:?}", r.wideband_snr_db), r.cqi.get().to_string()])?;
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_writer(create(&dir.join("plotdata_comp_state.csv"))?);
    let mut header = vec!["tti".to_string()];
    header.extend(outcome.modes.iter().map(|m| m.mode.as_str().to_string()));
    w.write_record(&header)?;
    for tti in 0..cfg.ttis {
        let mut row = vec![tti.to_string()];
        row.extend(outcome.modes.iter().map(|m| m.trace[tti].state.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a `per_ue.csv` written by [`write_outputs`].
pub fn read_per_ue_csv<R: Read>(reader: R) -> Result<Vec<UeStats>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(PER_UE_CSV_HEADER.iter().copied()) {
        return Err(Error::Config("per_ue.csv: unexpected header".into()));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| Error::Config(format!("per_ue.csv: {e}")))
        }
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let group = match &rec[1] {
            "macro" => CellKind::MacroSector,
            "pico" => CellKind::Pico,
            other => return Err(Error::Config(format!("per_ue.csv: unknown group {other:?}"))),
        };
        out.push(UeStats {
            ue_id: rec[0].parse().map_err(|e| Error::Config(format!("per_ue.csv: {e}")))?,
            group,
            throughput_mbps: opt(&rec[2])?.unwrap_or(0.0),
            mean_cqi: opt(&rec[3])?,
            mean_rsrp_dbm: opt(&rec[4])?,
            mean_bler: opt(&rec[5])?,
        });
    }
    Ok(out)
}
