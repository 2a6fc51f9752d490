//! Network layout: hexagonal macro sites, randomly scattered picos and
//! uniformly dropped UEs.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{self, AntennaSpec};
use crate::rng;

pub const INTER_SITE_DISTANCE_M: f64 = 100.0;
pub const DEFAULT_UE_COUNT: usize = 60;

pub const MACRO_TX_POWER_DBM: f64 = 46.0;
pub const MACRO_HEIGHT_M: f64 = 25.0;
pub const MACRO_TILT_DEG: f64 = 4.0;
pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [0.0, 120.0, 240.0];

pub const PICO_TX_POWER_DBM: f64 = 37.0;
pub const PICO_HEIGHT_M: f64 = 10.0;

pub const UE_HEIGHT_M: f64 = 1.5;
pub const UE_NOISE_FIGURE_DB: f64 = 7.0;
pub const UE_ANTENNA_GAIN_DBI: f64 = -1.0;
pub const UE_RX_ANTENNAS: u8 = 2;

/// Picos keep at least this distance from every macro site.
pub const PICO_MACRO_CLEARANCE_M: f64 = 20.0;
/// Picos keep at least this distance from each other.
pub const PICO_PICO_CLEARANCE_M: f64 = 40.0;
/// UEs may be dropped this far outside the macro hexagons.
pub const SERVICE_MARGIN_M: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    MacroSector,
    Pico,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub kind: CellKind,
    pub site_position: Point,
    pub antenna_height_m: f64,
    pub tx_power_dbm: f64,
    /// Boresight azimuth, counter-clockwise from +x. Macro sectors only.
    pub azimuth_deg: Option<f64>,
    /// Electrical downtilt. Macro sectors only.
    pub electrical_tilt_deg: Option<f64>,
    pub antenna: AntennaSpec,
}

impl Cell {
    fn macro_sector(id: usize, site: Point, azimuth_deg: f64) -> Self {
        Self {
            id,
            kind: CellKind::MacroSector,
            site_position: site,
            antenna_height_m: MACRO_HEIGHT_M,
            tx_power_dbm: MACRO_TX_POWER_DBM,
            azimuth_deg: Some(azimuth_deg),
            electrical_tilt_deg: Some(MACRO_TILT_DEG),
            antenna: AntennaSpec::macro_sector(),
        }
    }

    fn pico(id: usize, site: Point) -> Self {
        Self {
            id,
            kind: CellKind::Pico,
            site_position: site,
            antenna_height_m: PICO_HEIGHT_M,
            tx_power_dbm: PICO_TX_POWER_DBM,
            azimuth_deg: None,
            electrical_tilt_deg: None,
            antenna: AntennaSpec::pico_omni(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Point,
    pub height_m: f64,
    pub noise_figure_db: f64,
    pub antenna_gain_dbi: f64,
    pub serving_cell: usize,
    pub n_rx_antennas: u8,
}

impl UserEquipment {
    /// A UE at `position` with the standard receiver parameters. The serving
    /// cell is left at 0 until association.
    pub fn at(id: usize, position: Point) -> Self {
        Self {
            id,
            position,
            height_m: UE_HEIGHT_M,
            noise_figure_db: UE_NOISE_FIGURE_DB,
            antenna_gain_dbi: UE_ANTENNA_GAIN_DBI,
            serving_cell: 0,
            n_rx_antennas: UE_RX_ANTENNAS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioLabel {
    /// One three-sector macro site with three picos.
    A,
    /// A centre macro site with one tier of six neighbours and eleven picos.
    B,
}

impl ScenarioLabel {
    pub fn macro_sites(self) -> usize {
        match self {
            ScenarioLabel::A => 1,
            ScenarioLabel::B => 7,
        }
    }

    pub fn pico_count(self) -> usize {
        match self {
            ScenarioLabel::A => 3,
            ScenarioLabel::B => 11,
        }
    }
}

impl fmt::Display for ScenarioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioLabel::A => f.write_str("A"),
            ScenarioLabel::B => f.write_str("B"),
        }
    }
}

impl std::str::FromStr for ScenarioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ScenarioLabel::A),
            "B" | "b" => Ok(ScenarioLabel::B),
            other => Err(Error::invalid("scenario", format!("expected A or B, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: ScenarioLabel,
    pub cells: Vec<Cell>,
    pub cooperating_set: Vec<usize>,
    pub inter_site_distance_m: f64,
    pub n_ues: usize,
    pub macro_sites: Vec<Point>,
}

impl Scenario {
    pub fn cell(&self, id: usize) -> &Cell {
        &self.cells[id]
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|c| c.kind == kind).count()
    }

    fn apothem(&self) -> f64 {
        self.inter_site_distance_m / 2.0
    }

    /// Whether `p` lies inside the union of the macro hexagons grown by `margin`.
    pub fn in_hexagons(&self, p: &Point, margin: f64) -> bool {
        let limit = self.apothem() + margin;
        self.macro_sites.iter().any(|site| in_hexagon(p, site, limit))
    }

    pub fn in_service_area(&self, p: &Point) -> bool {
        self.in_hexagons(p, SERVICE_MARGIN_M)
    }

    /// Axis-aligned box enclosing the hexagons grown by `margin`.
    fn bounding_box(&self, margin: f64) -> (Point, Point) {
        let circumradius = (self.apothem() + margin) * 2.0 / 3f64.sqrt();
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &self.macro_sites {
            lo.x = lo.x.min(s.x - circumradius);
            lo.y = lo.y.min(s.y - circumradius);
            hi.x = hi.x.max(s.x + circumradius);
            hi.y = hi.y.max(s.y + circumradius);
        }
        (lo, hi)
    }
}

/// Hexagons tile with neighbours along 0°, 60°, ..., so their edge normals
/// point along those three axes.
fn in_hexagon(p: &Point, centre: &Point, apothem: f64) -> bool {
    let (dx, dy) = (p.x - centre.x, p.y - centre.y);
    (0..3).all(|k| {
        let a = (k as f64 * 60f64).to_radians();
        (dx * a.cos() + dy * a.sin()).abs() <= apothem
    })
}

fn macro_site_positions(label: ScenarioLabel, isd: f64) -> Vec<Point> {
    let mut sites = vec![Point::new(0.0, 0.0)];
    if label == ScenarioLabel::B {
        for k in 0..6 {
            let a = (k as f64 * 60f64).to_radians();
            sites.push(Point::new(isd * a.cos(), isd * a.sin()));
        }
    }
    sites
}

fn sample_in_box<R: Rng>(rng: &mut R, (lo, hi): (Point, Point)) -> Point {
    Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y))
}

/// Builds the cell layout. Macro sectors get ids first (site-major, sectors
/// in azimuth order), picos follow.
pub fn build_scenario(label: ScenarioLabel, rng_seed: u64) -> Scenario {
    let isd = INTER_SITE_DISTANCE_M;
    let macro_sites = macro_site_positions(label, isd);

    let mut cells = Vec::with_capacity(3 * macro_sites.len() + label.pico_count());
    for site in &macro_sites {
        for az in SECTOR_AZIMUTHS_DEG {
            cells.push(Cell::macro_sector(cells.len(), *site, az));
        }
    }

    let mut scenario = Scenario {
        label,
        cells,
        cooperating_set: Vec::new(),
        inter_site_distance_m: isd,
        n_ues: DEFAULT_UE_COUNT,
        macro_sites,
    };

    let mut rng = rng::substream(rng_seed, "pico-placement", &[]);
    let bbox = scenario.bounding_box(0.0);
    let mut picos: Vec<Point> = Vec::with_capacity(label.pico_count());
    let mut attempts = 0usize;
    while picos.len() < label.pico_count() {
        attempts += 1;
        assert!(attempts < 1_000_000, "pico placement did not converge");
        let p = sample_in_box(&mut rng, bbox);
        let ok = scenario.in_hexagons(&p, 0.0)
            && scenario
                .macro_sites
                .iter()
                .all(|s| s.distance(&p) >= PICO_MACRO_CLEARANCE_M)
            && picos.iter().all(|q| q.distance(&p) >= PICO_PICO_CLEARANCE_M);
        if ok {
            picos.push(p);
        }
    }
    for p in picos {
        let id = scenario.cells.len();
        scenario.cells.push(Cell::pico(id, p));
    }
    scenario.cooperating_set = scenario.cells.iter().map(|c| c.id).collect();
    scenario
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Drops `q` UEs uniformly over the service area and attaches each to its
/// strongest cell by RSRP (shadowing included).
pub fn drop_ues(scenario: &Scenario, q: usize, rng_seed: u64) -> Result<Vec<UserEquipment>> {
    if q == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut rng = rng::substream(rng_seed, "ue-drop", &[]);
    let bbox = scenario.bounding_box(SERVICE_MARGIN_M);
    let mut ues = Vec::with_capacity(q);
    while ues.len() < q {
        let p = sample_in_box(&mut rng, bbox);
        if scenario.in_service_area(&p) {
            ues.push(UserEquipment::at(ues.len(), p));
        }
    }
    for ue in &mut ues {
        let rsrps = scenario.cells.iter().map(|cell| {
            let shadow = propagation::shadow_sample(rng_seed, cell.id, ue.id);
            propagation::LinkState::new(cell, ue, shadow).rsrp_dbm
        });
        ue.serving_cell = argmax_lowest(rsrps).expect("scenario has cells");
    }
    Ok(ues)
}
