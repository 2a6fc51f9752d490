//! Link abstraction: SNR → CQI reporting, CQI → spectral efficiency, a
//! logistic BLER waterfall per CQI, and the per-stream fading process.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CQI_MIN: u8 = 1;
pub const CQI_MAX: u8 = 15;

/// Slope and intercept of the floor map from SNR (dB) to CQI.
pub const CQI_MAP_SLOPE: f64 = 0.522;
pub const CQI_MAP_INTERCEPT: f64 = 4.07;

/// Logistic waterfall steepness, per dB.
pub const BLER_SLOPE_PER_DB: f64 = 2.0;
/// Distance from the 50 % point up to the CQI entry threshold.
pub const BLER_MIDPOINT_BACKOFF_DB: f64 = 1.1;
pub const HARQ_BLER_TARGET: f64 = 0.1;

/// Spectral efficiency in bits/symbol for CQI 1..=15 (4-bit CQI table,
/// QPSK/16QAM/64QAM).
pub const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Cqi(u8);

impl Cqi {
    pub fn new(value: i64) -> Result<Self> {
        if (CQI_MIN as i64..=CQI_MAX as i64).contains(&value) {
            Ok(Cqi(value as u8))
        } else {
            Err(Error::CqiOutOfRange(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl TryFrom<u8> for Cqi {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Cqi::new(v as i64)
    }
}

impl From<Cqi> for u8 {
    fn from(c: Cqi) -> u8 {
        c.0
    }
}

/// CQI entry thresholds and efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqiTable {
    /// Lowest SNR (dB) reported as each CQI, 1..=15.
    pub thresholds_db: [f64; 15],
    pub efficiencies: [f64; 15],
}

impl Default for CqiTable {
    fn default() -> Self {
        let mut thresholds_db = [0.0; 15];
        for (i, t) in thresholds_db.iter_mut().enumerate() {
            *t = ((i + 1) as f64 - CQI_MAP_INTERCEPT) / CQI_MAP_SLOPE;
        }
        Self {
            thresholds_db,
            efficiencies: CQI_EFFICIENCY,
        }
    }
}

impl CqiTable {
    /// Reported CQI for a wideband SNR. Values below the CQI 1 threshold
    /// clamp to CQI 1 (no out-of-range report).
    pub fn snr_to_cqi(&self, snr_db: f64) -> Cqi {
        let raw = (CQI_MAP_SLOPE * snr_db + CQI_MAP_INTERCEPT).floor();
        Cqi(raw.clamp(CQI_MIN as f64, CQI_MAX as f64) as u8)
    }

    pub fn efficiency(&self, cqi: Cqi) -> f64 {
        self.efficiencies[cqi.index()]
    }

    /// Efficiency for an unchecked CQI value.
    pub fn cqi_to_efficiency(&self, cqi: i64) -> Result<f64> {
        Cqi::new(cqi).map(|c| self.efficiency(c))
    }

    pub fn threshold(&self, cqi: Cqi) -> f64 {
        self.thresholds_db[cqi.index()]
    }

    /// Block error probability of a transport block sent at `cqi` over a
    /// channel with effective SNR `snr_db`. Calibrated so the HARQ target is
    /// met (≈10 %) exactly at the CQI entry threshold.
    pub fn bler(&self, snr_db: f64, cqi: Cqi) -> f64 {
        let midpoint = self.threshold(cqi) - BLER_MIDPOINT_BACKOFF_DB;
        1.0 / (1.0 + (BLER_SLOPE_PER_DB * (snr_db - midpoint)).exp())
    }
}

pub const FADING_RHO: f64 = 0.9;
pub const FADING_SIGMA_DB: f64 = 3.0;

/// AR(1) log-normal fading offset in dB for one UE stream.
///
/// `offset[t] = ρ·offset[t-1] + sqrt(1-ρ²)·σ·n[t]`, started from the
/// stationary distribution N(0, σ²).
#[derive(Debug, Clone)]
pub struct FadingProcess<R> {
    pub rho: f64,
    pub sigma_db: f64,
    offset_db: f64,
    rng: R,
}

impl<R: Rng> FadingProcess<R> {
    pub fn new(rho: f64, sigma_db: f64, mut rng: R) -> Self {
        let n: f64 = StandardNormal.sample(&mut rng);
        Self {
            rho,
            sigma_db,
            offset_db: sigma_db * n,
            rng,
        }
    }

    pub fn offset_db(&self) -> f64 {
        self.offset_db
    }

    /// Advances one TTI and returns the new offset.
    pub fn fade_step(&mut self) -> f64 {
        let n: f64 = StandardNormal.sample(&mut self.rng);
        self.offset_db = self.rho * self.offset_db + (1.0 - self.rho * self.rho).sqrt() * self.sigma_db * n;
        self.offset_db
    }
}
