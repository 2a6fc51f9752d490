//! Large-scale link budget: COST 231-Hata path loss, antenna patterns,
//! static log-normal shadowing, RSRP and wideband SNR.
//!
//! Interference is not modelled; zero-forcing reception leaves thermal noise
//! as the only impairment, so SNR and SINR are the same quantity everywhere
//! downstream.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cell, Scenario, UserEquipment};
use crate::rng;

pub const CARRIER_MHZ: f64 = 2100.0;
pub const BANDWIDTH_HZ: f64 = 10e6;
pub const N_PRB: usize = 50;
pub const SUBCARRIERS_PER_PRB: usize = 12;
pub const NOISE_DENSITY_DBM_HZ: f64 = -174.0;
pub const SHADOW_STD_DB: f64 = 8.0;
pub const MIN_DISTANCE_M: f64 = 1.0;

/// 10·log10 of the number of subcarriers carrying the transmit power.
pub fn subcarrier_spread_db() -> f64 {
    10.0 * ((SUBCARRIERS_PER_PRB * N_PRB) as f64).log10()
}

/// Thermal noise over the channel bandwidth seen through a receiver with
/// noise figure `nf_db`.
pub fn noise_floor_dbm(nf_db: f64) -> f64 {
    NOISE_DENSITY_DBM_HZ + 10.0 * BANDWIDTH_HZ.log10() + nf_db
}

/// Large-city mobile antenna height correction.
fn mobile_height_correction(h_ue: f64) -> f64 {
    3.2 * (11.75 * h_ue).log10().powi(2) - 4.97
}

/// COST 231-Hata path loss in dB (metropolitan, +3 dB). Distances below
/// 1 m are clamped to 1 m.
pub fn cost231_path_loss(distance_m: f64, freq_mhz: f64, h_base_m: f64, h_ue_m: f64) -> Result<f64> {
    for (name, v) in [("frequency", freq_mhz), ("base station height", h_base_m), ("UE height", h_ue_m)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    if distance_m.is_nan() {
        return Err(Error::invalid("distance", "NaN"));
    }
    let d_km = distance_m.max(MIN_DISTANCE_M) / 1000.0;
    let hb = h_base_m.log10();
    Ok(46.3 + 33.9 * freq_mhz.log10() - 13.82 * hb - mobile_height_correction(h_ue_m)
        + (44.9 - 6.55 * hb) * d_km.log10()
        + 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKind {
    Parametric3Sector,
    Omni,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaSpec {
    pub kind: AntennaKind,
    pub max_gain_dbi: f64,
    pub h_beamwidth_deg: f64,
    pub v_beamwidth_deg: f64,
    pub front_back_db: f64,
    /// Cap on the vertical attenuation term.
    pub sla_db: f64,
}

impl AntennaSpec {
    /// Parametric stand-in for the macro panel antenna.
    pub fn macro_sector() -> Self {
        Self {
            kind: AntennaKind::Parametric3Sector,
            max_gain_dbi: 18.0,
            h_beamwidth_deg: 65.0,
            v_beamwidth_deg: 6.2,
            front_back_db: 30.0,
            sla_db: 30.0,
        }
    }

    pub fn pico_omni() -> Self {
        Self {
            kind: AntennaKind::Omni,
            max_gain_dbi: 5.0,
            h_beamwidth_deg: 360.0,
            v_beamwidth_deg: 180.0,
            front_back_db: 0.0,
            sla_db: 0.0,
        }
    }

    /// Gain towards a receiver at `azimuth_offset_deg` from boresight and
    /// `elevation_deg` below the horizon, for an antenna downtilted by
    /// `tilt_deg`.
    pub fn gain(&self, azimuth_offset_deg: f64, elevation_deg: f64, tilt_deg: f64) -> f64 {
        match self.kind {
            AntennaKind::Omni => self.max_gain_dbi,
            AntennaKind::Parametric3Sector => {
                let az = normalize_angle(azimuth_offset_deg);
                let horizontal = 12.0 * (az / self.h_beamwidth_deg).powi(2);
                let vertical = (12.0 * ((elevation_deg - tilt_deg) / self.v_beamwidth_deg).powi(2)).min(self.sla_db);
                self.max_gain_dbi - (horizontal + vertical).min(self.front_back_db)
            }
        }
    }
}

/// Maps an angle into (-180°, 180°].
pub fn normalize_angle(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub cell_id: usize,
    pub ue_id: usize,
    pub tx_power_dbm: f64,
    pub path_loss_db: f64,
    /// Transmit antenna gain towards the UE.
    pub antenna_gain_db: f64,
    pub ue_antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub shadow_db: f64,
    pub rsrp_dbm: f64,
    pub wideband_snr_db: f64,
}

impl LinkState {
    /// Link budget for a given shadowing sample.
    pub fn new(cell: &Cell, ue: &UserEquipment, shadow_db: f64) -> Self {
        let d = cell.site_position.distance(&ue.position).max(MIN_DISTANCE_M);
        let path_loss_db = cost231_path_loss(d, CARRIER_MHZ, cell.antenna_height_m, ue.height_m)
            .expect("cell and UE heights are positive");
        let antenna_gain_db = match cell.azimuth_deg {
            Some(azimuth) => {
                let bearing = (ue.position.y - cell.site_position.y)
                    .atan2(ue.position.x - cell.site_position.x)
                    .to_degrees();
                let elevation = (cell.antenna_height_m - ue.height_m).atan2(d).to_degrees();
                cell.antenna
                    .gain(bearing - azimuth, elevation, cell.electrical_tilt_deg.unwrap_or(0.0))
            }
            None => cell.antenna.gain(0.0, 0.0, 0.0),
        };
        Self::from_budget(
            cell.id,
            ue.id,
            cell.tx_power_dbm,
            path_loss_db,
            antenna_gain_db,
            ue.antenna_gain_dbi,
            ue.noise_figure_db,
            shadow_db,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_budget(
        cell_id: usize,
        ue_id: usize,
        tx_power_dbm: f64,
        path_loss_db: f64,
        antenna_gain_db: f64,
        ue_antenna_gain_dbi: f64,
        noise_figure_db: f64,
        shadow_db: f64,
    ) -> Self {
        let per_re = tx_power_dbm - subcarrier_spread_db();
        let rsrp_dbm = per_re + antenna_gain_db + ue_antenna_gain_dbi - path_loss_db - shadow_db;
        let wideband_snr_db = rsrp_dbm + subcarrier_spread_db() - noise_floor_dbm(noise_figure_db);
        Self {
            cell_id,
            ue_id,
            tx_power_dbm,
            path_loss_db,
            antenna_gain_db,
            ue_antenna_gain_dbi,
            noise_figure_db,
            shadow_db,
            rsrp_dbm,
            wideband_snr_db,
        }
    }

    /// Recomputes RSRP and SNR from the stored budget terms.
    pub fn recomputed(&self) -> Self {
        Self::from_budget(
            self.cell_id,
            self.ue_id,
            self.tx_power_dbm,
            self.path_loss_db,
            self.antenna_gain_db,
            self.ue_antenna_gain_dbi,
            self.noise_figure_db,
            self.shadow_db,
        )
    }
}

/// Computes a link, drawing its static shadowing sample from `rng`.
pub fn compute_link<R: Rng>(cell: &Cell, ue: &UserEquipment, rng: &mut R) -> LinkState {
    let shadow = Normal::new(0.0, SHADOW_STD_DB).expect("positive std").sample(rng);
    LinkState::new(cell, ue, shadow)
}

/// The static shadowing sample of link (cell, ue) for a run seed.
pub fn shadow_sample(run_seed: u64, cell_id: usize, ue_id: usize) -> f64 {
    let mut rng = rng::substream(run_seed, "shadow", &[cell_id as u64, ue_id as u64]);
    Normal::new(0.0, SHADOW_STD_DB).expect("positive std").sample(&mut rng)
}

/// Every (cell, UE) link of a run, row-major by cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkTable {
    n_ues: usize,
    links: Vec<LinkState>,
}

impl LinkTable {
    pub fn build(scenario: &Scenario, ues: &[UserEquipment], run_seed: u64) -> Self {
        let mut links = Vec::with_capacity(scenario.cells.len() * ues.len());
        for cell in &scenario.cells {
            for ue in ues {
                links.push(LinkState::new(cell, ue, shadow_sample(run_seed, cell.id, ue.id)));
            }
        }
        Self { n_ues: ues.len(), links }
    }

    pub fn get(&self, cell_id: usize, ue_id: usize) -> &LinkState {
        &self.links[cell_id * self.n_ues + ue_id]
    }

    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    /// Strongest cell by RSRP other than `exclude`, lowest id on ties.
    pub fn strongest_other(&self, ue_id: usize, exclude: usize, cells: &[usize]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &c in cells {
            if c == exclude {
                continue;
            }
            let r = self.get(c, ue_id).rsrp_dbm;
            match best {
                Some((bc, br)) if r < br || (r == br && c > bc) => {}
                _ => best = Some((c, r)),
            }
        }
        best.map(|(c, _)| c)
    }
}
