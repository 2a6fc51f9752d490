//! KPI aggregation: per-UE long-run throughput, group percentiles and
//! link-level averages, plus baseline/dynamic comparison tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::controller::UeReport;
use crate::error::{Error, Result};
use crate::geometry::{CellKind, ScenarioLabel};

pub const EDGE_PERCENTILE: f64 = 5.0;
pub const PEAK_PERCENTILE: f64 = 95.0;
pub const TTI_SECONDS: f64 = 1e-3;

/// Percentile of an ascending slice, interpolating linearly between order
/// statistics at rank `p/100 · (n − 1)`.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One transmitted transport block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub tti: usize,
    pub ue_id: usize,
    pub bler: f64,
}

/// Everything a finished run contributes to the KPIs.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub n_ttis: usize,
    /// Kind of each UE's serving cell, indexed by UE id.
    pub grouping: Vec<CellKind>,
    pub cumulative_bits: Vec<f64>,
    pub reports: Vec<UeReport>,
    pub blocks: Vec<BlockRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeStats {
    pub ue_id: usize,
    pub group: CellKind,
    pub throughput_mbps: f64,
    pub mean_cqi: Option<f64>,
    pub mean_rsrp_dbm: Option<f64>,
    /// `None` when the UE never transmitted.
    pub mean_bler: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupKpi {
    pub n_ues: usize,
    pub peak_mbps: Option<f64>,
    pub average_mbps: Option<f64>,
    pub edge_mbps: Option<f64>,
}

impl GroupKpi {
    fn from_throughputs(mut t: Vec<f64>) -> Self {
        t.sort_by(f64::total_cmp);
        Self {
            n_ues: t.len(),
            peak_mbps: percentile(&t, PEAK_PERCENTILE),
            average_mbps: mean(t.iter().copied()),
            edge_mbps: percentile(&t, EDGE_PERCENTILE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub scenario: ScenarioLabel,
    pub seed: u64,
    pub mode: String,
    pub macro_served: GroupKpi,
    pub pico_served: GroupKpi,
    pub overall: GroupKpi,
    /// Fraction in [0, 1], over all transmitted blocks.
    pub avg_bler: Option<f64>,
    pub avg_cqi: Option<f64>,
    pub avg_cqi_rounded: Option<i64>,
    pub avg_rsrp_dbm: Option<f64>,
}

impl KpiSummary {
    pub fn group(&self, kind: Option<CellKind>) -> &GroupKpi {
        match kind {
            Some(CellKind::MacroSector) => &self.macro_served,
            Some(CellKind::Pico) => &self.pico_served,
            None => &self.overall,
        }
    }
}

/// `17.2` → `"17.20%"`.
pub fn bler_percent(bler: f64) -> String {
    format!("{:.2}%", 100.0 * bler)
}

/// Per-UE statistics and the KPI summary of one run.
pub fn aggregate(log: &RunLog, scenario: ScenarioLabel, seed: u64, mode: &str) -> Result<(KpiSummary, Vec<UeStats>)> {
    if log.n_ttis == 0 {
        return Err(Error::invalid("n_ttis", "must be at least 1"));
    }
    if log.grouping.len() != log.cumulative_bits.len() {
        return Err(Error::LengthMismatch {
            left: log.grouping.len(),
            right: log.cumulative_bits.len(),
        });
    }
    let n = log.grouping.len();
    let duration_s = log.n_ttis as f64 * TTI_SECONDS;

    let mut cqi_sum = vec![(0.0, 0usize); n];
    let mut rsrp_sum = vec![(0.0, 0usize); n];
    for r in &log.reports {
        cqi_sum[r.ue_id].0 += r.cqi.get() as f64;
        cqi_sum[r.ue_id].1 += 1;
        rsrp_sum[r.ue_id].0 += r.rsrp_dbm;
        rsrp_sum[r.ue_id].1 += 1;
    }
    let mut bler_sum = vec![(0.0, 0usize); n];
    for b in &log.blocks {
        bler_sum[b.ue_id].0 += b.bler;
        bler_sum[b.ue_id].1 += 1;
    }
    let ratio = |(s, k): (f64, usize)| (k > 0).then(|| s / k as f64);

    let per_ue: Vec<UeStats> = (0..n)
        .map(|ue| UeStats {
            ue_id: ue,
            group: log.grouping[ue],
            throughput_mbps: log.cumulative_bits[ue] / duration_s / 1e6,
            mean_cqi: ratio(cqi_sum[ue]),
            mean_rsrp_dbm: ratio(rsrp_sum[ue]),
            mean_bler: ratio(bler_sum[ue]),
        })
        .collect();

    let of_group = |kind: CellKind| {
        GroupKpi::from_throughputs(per_ue.iter().filter(|u| u.group == kind).map(|u| u.throughput_mbps).collect())
    };
    let avg_cqi = mean(log.reports.iter().map(|r| r.cqi.get() as f64));
    let summary = KpiSummary {
        scenario,
        seed,
        mode: mode.to_string(),
        macro_served: of_group(CellKind::MacroSector),
        pico_served: of_group(CellKind::Pico),
        overall: GroupKpi::from_throughputs(per_ue.iter().map(|u| u.throughput_mbps).collect()),
        avg_bler: mean(log.blocks.iter().map(|b| b.bler)),
        avg_cqi,
        avg_cqi_rounded: avg_cqi.map(|c| c.round() as i64),
        avg_rsrp_dbm: mean(log.reports.iter().map(|r| r.rsrp_dbm)),
    };
    Ok((summary, per_ue))
}

/// Whether a larger value of a metric is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub baseline: Option<f64>,
    pub dynamic: Option<f64>,
    pub delta: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: ScenarioLabel,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

fn metrics_of(k: &KpiSummary) -> Vec<(&'static str, Option<f64>, Direction)> {
    use Direction::*;
    let mut out = Vec::new();
    for (name, g) in [("macro", &k.macro_served), ("pico", &k.pico_served), ("overall", &k.overall)] {
        let (peak, avg, edge) = match name {
            "macro" => ("macro.peak_mbps", "macro.average_mbps", "macro.edge_mbps"),
            "pico" => ("pico.peak_mbps", "pico.average_mbps", "pico.edge_mbps"),
            _ => ("overall.peak_mbps", "overall.average_mbps", "overall.edge_mbps"),
        };
        out.push((peak, g.peak_mbps, HigherIsBetter));
        out.push((avg, g.average_mbps, HigherIsBetter));
        out.push((edge, g.edge_mbps, HigherIsBetter));
    }
    out.push(("avg_bler", k.avg_bler, LowerIsBetter));
    out.push(("avg_cqi", k.avg_cqi, Neutral));
    out.push(("avg_rsrp_dbm", k.avg_rsrp_dbm, Neutral));
    out
}

/// Side-by-side table with deltas (`dynamic − baseline`) and improvement
/// flags.
pub fn compare_runs(baseline: &KpiSummary, dynamic: &KpiSummary) -> Result<Comparison> {
    if baseline.scenario != dynamic.scenario {
        return Err(Error::ScenarioMismatch {
            baseline: baseline.scenario.to_string(),
            dynamic: dynamic.scenario.to_string(),
        });
    }
    let rows = metrics_of(baseline)
        .into_iter()
        .zip(metrics_of(dynamic))
        .map(|((metric, b, dir), (_, d, _))| {
            let delta = b.zip(d).map(|(b, d)| d - b);
            let improved = match (dir, delta) {
                (Direction::HigherIsBetter, Some(x)) => x > 0.0,
                (Direction::LowerIsBetter, Some(x)) => x < 0.0,
                _ => false,
            };
            ComparisonRow {
                metric: metric.to_string(),
                baseline: b,
                dynamic: d,
                delta,
                improved,
            }
        })
        .collect();
    Ok(Comparison {
        scenario: baseline.scenario,
        rows,
    })
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    v.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}

pub const KPI_CSV_HEADER: [&str; 9] = [
    "mode",
    "group",
    "n_ues",
    "peak_mbps",
    "average_mbps",
    "edge_mbps",
    "avg_bler",
    "avg_cqi",
    "avg_rsrp_dbm",
];

/// Table-formatted KPIs: one row per mode and group, link-level columns on
/// the overall row only.
pub fn write_kpis_csv<W: Write>(writer: W, summaries: &[KpiSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(KPI_CSV_HEADER)?;
    for k in summaries {
        for (name, g) in [("macro", &k.macro_served), ("pico", &k.pico_served), ("overall", &k.overall)] {
            let overall = name == "overall";
            w.write_record([
                k.mode.clone(),
                name.to_string(),
                g.n_ues.to_string(),
                cell(g.peak_mbps, 2),
                cell(g.average_mbps, 2),
                cell(g.edge_mbps, 2),
                if overall { k.avg_bler.map(bler_percent).unwrap_or_default() } else { String::new() },
                if overall { k.avg_cqi_rounded.map(|c| c.to_string()).unwrap_or_default() } else { String::new() },
                if overall { cell(k.avg_rsrp_dbm, 2) } else { String::new() },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const PER_UE_CSV_HEADER: [&str; 6] = ["ue_id", "group", "throughput_mbps", "mean_cqi", "mean_rsrp_dbm", "mean_bler"];

fn group_name(kind: CellKind) -> &'static str {
    match kind {
        CellKind::MacroSector => "macro",
        CellKind::Pico => "pico",
    }
}

/// Full-precision per-UE table.
pub fn write_per_ue_csv<W: Write>(writer: W, per_ue: &[UeStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PER_UE_CSV_HEADER)?;
    let full = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for u in per_ue {
        w.write_record([
            u.ue_id.to_string(),
            group_name(u.group).to_string(),
            format!("{:?}", u.throughput_mbps),
            full(u.mean_cqi),
            full(u.mean_rsrp_dbm),
            full(u.mean_bler),
        ])?;
    }
    w.flush()?;
    Ok(())
}
