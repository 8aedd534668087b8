//! Urban-macro downlink deployment: hexagonal site grid, sectorized gNBs,
//! uniform UE drop with indoor flags, per-link channel state, pathloss and
//! shadow fading, and pathloss-based attachment.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::params::{ChannelState, ParamTable};
use crate::rng::{Phase, SeedTree};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Validity floor of the pathloss model.
const MIN_DISTANCE_2D: f64 = 10.0;
/// Building penetration loss for outdoor-to-indoor links (low-loss model).
const O2I_PENETRATION_DB: f64 = 20.0;
/// Additional indoor loss per meter of indoor distance.
const O2I_INDOOR_LOSS_DB_PER_M: f64 = 0.5;
/// Indoor distance is drawn uniformly in [0, this] meters.
const O2I_MAX_INDOOR_DISTANCE_M: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance_2d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn distance_3d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Scenario-level configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub inter_site_distance: f64,
    pub num_sites: usize,
    pub sectors_per_site: usize,
    pub gnb_height: f64,
    pub ue_height: f64,
    pub num_ues: usize,
    pub indoor_fraction: f64,
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    pub subcarrier_spacing: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            inter_site_distance: 500.0,
            num_sites: 7,
            sectors_per_site: 3,
            gnb_height: 25.0,
            ue_height: 1.5,
            num_ues: 100,
            indoor_fraction: 0.8,
            carrier_frequency: 30e9,
            // 1667 subcarriers at 60 kHz; an exact multiple of the spacing.
            bandwidth: 100.02e6,
            subcarrier_spacing: 60e3,
            tx_power_dbm: 35.0,
            noise_figure_db: 9.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.indoor_fraction) {
            return Err(SimError::config(format!(
                "indoor_fraction must be in [0,1], got {}",
                self.indoor_fraction
            )));
        }
        for (name, v) in [
            ("inter_site_distance", self.inter_site_distance),
            ("gnb_height", self.gnb_height),
            ("ue_height", self.ue_height),
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("subcarrier_spacing", self.subcarrier_spacing),
        ] {
            if !(v > 0.0) {
                return Err(SimError::config(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.num_ues == 0 || self.sectors_per_site == 0 {
            return Err(SimError::config("num_ues and sectors_per_site must be >= 1"));
        }
        let ratio = self.bandwidth / self.subcarrier_spacing;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(SimError::config(format!(
                "bandwidth ({}) must be an integer multiple of subcarrier_spacing ({})",
                self.bandwidth, self.subcarrier_spacing
            )));
        }
        hex_ring_count(self.num_sites)?;
        Ok(())
    }

    pub fn num_subcarriers(&self) -> usize {
        (self.bandwidth / self.subcarrier_spacing).round() as usize
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

/// One gNB-to-UE link with resolved large-scale quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub gnb_id: u32,
    pub ue_id: u32,
    pub d2d: f64,
    pub d3d: f64,
    pub state: ChannelState,
    pub pathloss_db: f64,
    pub shadow_fading_db: f64,
    /// Set when d3D was below the model validity floor and got clamped.
    pub distance_clamped: bool,
}

impl Link {
    pub fn coupling_loss_db(&self) -> f64 {
        self.pathloss_db + self.shadow_fading_db
    }
}

/// Complete immutable deployment: geometry, link states, attachment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Deployment {
    pub config: ScenarioConfig,
    pub site_positions: Vec<Point3>,
    pub gnb_positions: Vec<Point3>,
    /// Sector boresight azimuth per gNB, degrees.
    pub sector_orientations: Vec<f64>,
    /// Site index behind each gNB (sectors of a site are co-located).
    pub gnb_sites: Vec<usize>,
    pub ue_positions: Vec<Point3>,
    pub ue_indoor: Vec<bool>,
    /// Indoor distance in meters; 0 for outdoor UEs.
    pub ue_indoor_depth: Vec<f64>,
    /// Row-major over (gnb, ue): index = gnb * num_ues + ue.
    pub links: Vec<Link>,
    /// ue_id -> serving gnb_id.
    pub attachment: Vec<u32>,
}

impl Deployment {
    pub fn num_gnbs(&self) -> usize {
        self.gnb_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn link(&self, gnb_id: u32, ue_id: u32) -> &Link {
        &self.links[gnb_id as usize * self.num_ues() + ue_id as usize]
    }

    /// UEs attached to a sector of the central site; metrics are collected
    /// only for these to limit edge effects.
    pub fn central_ues(&self) -> Vec<u32> {
        let sectors = self.config.sectors_per_site as u32;
        (0..self.num_ues() as u32)
            .filter(|&ue| self.attachment[ue as usize] < sectors)
            .collect()
    }
}

/// Number of hexagonal rings for a centered hexagonal site count.
fn hex_ring_count(num_sites: usize) -> Result<usize> {
    let mut k = 0usize;
    loop {
        let count = 1 + 3 * k * (k + 1);
        if count == num_sites {
            return Ok(k);
        }
        if count > num_sites {
            return Err(SimError::config(format!(
                "num_sites must be a centered hexagonal number (1, 7, 19, ...), got {num_sites}"
            )));
        }
        k += 1;
    }
}

/// Site positions on a hexagonal grid, center first, then ring by ring in
/// angular order.
fn hex_site_positions(num_sites: usize, isd: f64, height: f64) -> Result<Vec<Point3>> {
    let rings = hex_ring_count(num_sites)? as i64;
    let sqrt3 = 3f64.sqrt();
    let mut sites: Vec<(i64, f64, Point3)> = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            if ring > rings {
                continue;
            }
            let x = isd * (q as f64 + r as f64 / 2.0);
            let y = isd * (r as f64 * sqrt3 / 2.0);
            let angle = y.atan2(x);
            sites.push((ring, angle, Point3::new(x, y, height)));
        }
    }
    sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));
    Ok(sites.into_iter().map(|(_, _, p)| p).collect())
}

/// LoS probability for an outdoor urban-macro link (UE height <= 13 m).
pub fn los_probability(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        return 1.0;
    }
    let decay = (-d2d / 63.0).exp();
    (18.0 / d2d) * (1.0 - decay) + decay
}

/// Resolves the channel state of one link.
pub fn assign_channel_state(ue_indoor: bool, d2d: f64, rng: &mut impl Rng) -> ChannelState {
    if ue_indoor {
        return ChannelState::O2i;
    }
    if rng.random::<f64>() < los_probability(d2d) {
        ChannelState::Los
    } else {
        ChannelState::Nlos
    }
}

/// Breakpoint distance of the dual-slope LoS pathloss.
pub fn breakpoint_distance(gnb_height: f64, ue_height: f64, fc_hz: f64) -> f64 {
    4.0 * (gnb_height - 1.0) * (ue_height - 1.0) * fc_hz / SPEED_OF_LIGHT
}

fn los_pathloss_db(d2d: f64, d3d: f64, config: &ScenarioConfig) -> f64 {
    let fc_ghz = config.carrier_frequency / 1e9;
    let d_bp = breakpoint_distance(config.gnb_height, config.ue_height, config.carrier_frequency);
    if d2d <= d_bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        let dh = config.gnb_height - config.ue_height;
        28.0 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10()
            - 9.0 * (d_bp * d_bp + dh * dh).log10()
    }
}

fn nlos_pathloss_db(d2d: f64, d3d: f64, config: &ScenarioConfig) -> f64 {
    let fc_ghz = config.carrier_frequency / 1e9;
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10()
        - 0.6 * (config.ue_height - 1.5);
    nlos.max(los_pathloss_db(d2d, d3d, config))
}

/// Pathloss in dB for a resolved link geometry. Distances below the model
/// floor are clamped to 10 m; the returned flag records the clamp.
pub fn pathloss_db(
    state: ChannelState,
    d2d: f64,
    d3d: f64,
    indoor_depth: f64,
    config: &ScenarioConfig,
) -> (f64, bool) {
    let clamped = d3d < MIN_DISTANCE_2D;
    let d3d = d3d.max(MIN_DISTANCE_2D);
    let d2d = d2d.max(1.0);
    let pl = match state {
        ChannelState::Los => los_pathloss_db(d2d, d3d, config),
        ChannelState::Nlos => nlos_pathloss_db(d2d, d3d, config),
        ChannelState::O2i => {
            nlos_pathloss_db(d2d, d3d, config)
                + O2I_PENETRATION_DB
                + O2I_INDOOR_LOSS_DB_PER_M * indoor_depth
        }
    };
    (pl, clamped)
}

/// Zero-mean Gaussian shadow fading draw with the per-state sigma.
pub fn shadow_fading_db(state: ChannelState, table: &ParamTable, fc_hz: f64, rng: &mut impl Rng) -> f64 {
    let sigma = table.state(state).sf_sigma.eval(fc_hz);
    if sigma <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).unwrap().sample(rng)
}

/// Attachment: each UE to the gNB minimizing pathloss + shadow fading,
/// ties broken by lowest gnb_id.
pub fn attach_ues(links: &[Link], num_gnbs: usize, num_ues: usize) -> Vec<u32> {
    (0..num_ues)
        .map(|ue| {
            let mut best = 0u32;
            let mut best_loss = f64::INFINITY;
            for gnb in 0..num_gnbs {
                let loss = links[gnb * num_ues + ue].coupling_loss_db();
                if loss < best_loss {
                    best_loss = loss;
                    best = gnb as u32;
                }
            }
            best
        })
        .collect()
}

/// Drops a full deployment: site grid, sectors, UEs, link states, pathloss,
/// shadowing and attachment. Deterministic for a given (config, seed tree).
pub fn drop_scenario(
    config: &ScenarioConfig,
    table: &ParamTable,
    tree: &SeedTree,
) -> Result<Deployment> {
    config.validate()?;
    let isd = config.inter_site_distance;
    let site_positions = hex_site_positions(config.num_sites, isd, config.gnb_height)?;
    let rings = hex_ring_count(config.num_sites)? as f64;

    let mut gnb_positions = Vec::new();
    let mut sector_orientations = Vec::new();
    let mut gnb_sites = Vec::new();
    for (site_idx, site) in site_positions.iter().enumerate() {
        for sector in 0..config.sectors_per_site {
            gnb_positions.push(*site);
            sector_orientations.push(360.0 * sector as f64 / config.sectors_per_site as f64);
            gnb_sites.push(site_idx);
        }
    }
    let num_gnbs = gnb_positions.len();

    // UE drop over the circle circumscribing the layout; re-drop UEs inside
    // the 10 m validity floor of any site.
    let drop_radius = rings * isd + isd / 3f64.sqrt();
    let mut drop_rng = tree.scenario_stream(Phase::UeDrop);
    let mut ue_positions = Vec::with_capacity(config.num_ues);
    while ue_positions.len() < config.num_ues {
        let r = drop_radius * drop_rng.random::<f64>().sqrt();
        let theta = 2.0 * std::f64::consts::PI * drop_rng.random::<f64>();
        let pos = Point3::new(r * theta.cos(), r * theta.sin(), config.ue_height);
        if site_positions.iter().any(|s| s.distance_2d(&pos) < MIN_DISTANCE_2D) {
            continue;
        }
        ue_positions.push(pos);
    }

    // Exactly round(indoor_fraction * num_ues) indoor UEs, chosen uniformly.
    let num_indoor = (config.indoor_fraction * config.num_ues as f64).round() as usize;
    let mut indices: Vec<usize> = (0..config.num_ues).collect();
    let mut flag_rng = tree.scenario_stream(Phase::IndoorFlags);
    for i in 0..config.num_ues.saturating_sub(1) {
        let j = i + flag_rng.random_range(0..(config.num_ues - i));
        indices.swap(i, j);
    }
    let mut ue_indoor = vec![false; config.num_ues];
    for &idx in indices.iter().take(num_indoor) {
        ue_indoor[idx] = true;
    }

    let mut ue_indoor_depth = vec![0.0; config.num_ues];
    for (ue, depth) in ue_indoor_depth.iter_mut().enumerate() {
        if ue_indoor[ue] {
            let mut rng = tree.link_stream(0, ue as u32, Phase::IndoorDepth);
            *depth = O2I_MAX_INDOOR_DISTANCE_M * rng.random::<f64>();
        }
    }

    let mut links = Vec::with_capacity(num_gnbs * config.num_ues);
    for gnb in 0..num_gnbs {
        let site = gnb_sites[gnb];
        for ue in 0..config.num_ues {
            let d2d = site_positions[site].distance_2d(&ue_positions[ue]);
            let d3d = site_positions[site].distance_3d(&ue_positions[ue]);
            // Co-located sectors of one site share the channel state.
            let mut state_rng = tree.link_stream(site as u32, ue as u32, Phase::ChannelState);
            let state = assign_channel_state(ue_indoor[ue], d2d, &mut state_rng);
            let (pl, clamped) = pathloss_db(state, d2d, d3d, ue_indoor_depth[ue], config);
            let mut sf_rng = tree.link_stream(gnb as u32, ue as u32, Phase::ShadowFading);
            let sf = shadow_fading_db(state, table, config.carrier_frequency, &mut sf_rng);
            links.push(Link {
                gnb_id: gnb as u32,
                ue_id: ue as u32,
                d2d,
                d3d,
                state,
                pathloss_db: pl,
                shadow_fading_db: sf,
                distance_clamped: clamped,
            });
        }
    }

    let attachment = attach_ues(&links, num_gnbs, config.num_ues);

    Ok(Deployment {
        config: config.clone(),
        site_positions,
        gnb_positions,
        sector_orientations,
        gnb_sites,
        ue_positions,
        ue_indoor,
        ue_indoor_depth,
        links,
        attachment,
    })
}
