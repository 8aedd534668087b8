//! Small-scale fading generation: large-scale parameter draws, cluster
//! delays/powers/angles, ray coupling, initial phases, and the per-cluster
//! channel matrices of the cluster delay line.
//!
//! The (N, M) simplification is first-class configuration: cluster counts per
//! channel state and the ray count per cluster are knobs, limited only by
//! which cluster counts have scaling constants in the parameter table.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::antenna::{direction_unit_vector, steering_vector_into, AntennaArray};
use crate::error::{Result, SimError};
use crate::params::{ChannelState, ParamTable, StateParams};
use crate::profiler::PhaseTimer;
use crate::rng::{Phase, SeedTree};
use crate::scenario::Point3;

/// Cluster and ray count knobs defining baseline vs simplified channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplificationConfig {
    pub n_los: usize,
    pub n_nlos: usize,
    pub n_o2i: usize,
    pub m_rays: usize,
}

impl SimplificationConfig {
    /// Full-complexity configuration: N = 12/20/12, M = 20.
    pub fn baseline() -> Self {
        SimplificationConfig { n_los: 12, n_nlos: 20, n_o2i: 12, m_rays: 20 }
    }

    /// Most aggressive reduction: N = 8/8/8, M = 1.
    pub fn most_simplified() -> Self {
        SimplificationConfig { n_los: 8, n_nlos: 8, n_o2i: 8, m_rays: 1 }
    }

    pub fn clusters_for(&self, state: ChannelState) -> usize {
        match state {
            ChannelState::Los => self.n_los,
            ChannelState::Nlos => self.n_nlos,
            ChannelState::O2i => self.n_o2i,
        }
    }

    pub fn validate(&self, table: &ParamTable) -> Result<()> {
        let supported = table.supported_cluster_counts();
        for (name, n) in [("LoS", self.n_los), ("NLoS", self.n_nlos), ("O2I", self.n_o2i)] {
            if !supported.contains(&n) {
                return Err(SimError::config(format!(
                    "{name} cluster count {n} is not in the supported set {supported:?}"
                )));
            }
        }
        if !(1..=20).contains(&self.m_rays) {
            return Err(SimError::config(format!(
                "rays per cluster must be in [1, 20], got {}",
                self.m_rays
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{} M={}", self.n_los, self.n_nlos, self.n_o2i, self.m_rays)
    }
}

/// Per-link large-scale parameter realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleParams {
    pub delay_spread_s: f64,
    pub asa_deg: f64,
    pub asd_deg: f64,
    pub zsa_deg: f64,
    pub zsd_deg: f64,
    /// dB; only meaningful in LoS.
    pub k_factor_db: f64,
    pub r_tau: f64,
    pub zeta_db: f64,
    pub c_asa: f64,
    pub c_asd: f64,
    pub c_zsa: f64,
    pub c_zsd: f64,
}

/// Log-normal draws for the spreads, Gaussian K-factor, constants copied
/// from the table.
pub fn draw_large_scale_params(
    state: ChannelState,
    fc_hz: f64,
    table: &ParamTable,
    rng: &mut impl Rng,
) -> LargeScaleParams {
    let p: &StateParams = table.state(state);
    let mut lognormal = |mu: f64, sigma: f64| -> f64 {
        let draw = if sigma > 0.0 {
            Normal::new(mu, sigma).unwrap().sample(rng)
        } else {
            mu
        };
        10f64.powf(draw)
    };
    let delay_spread_s = lognormal(p.lg_ds_mu.eval(fc_hz), p.lg_ds_sigma.eval(fc_hz));
    let asa_deg = lognormal(p.lg_asa_mu.eval(fc_hz), p.lg_asa_sigma.eval(fc_hz));
    let asd_deg = lognormal(p.lg_asd_mu.eval(fc_hz), p.lg_asd_sigma.eval(fc_hz));
    let zsa_deg = lognormal(p.lg_zsa_mu.eval(fc_hz), p.lg_zsa_sigma.eval(fc_hz));
    // ZSD at an elevated site is far narrower than ZSA; it has its own row.
    let zsd_deg = lognormal(p.lg_zsd_mu.eval(fc_hz), p.lg_zsd_sigma.eval(fc_hz));
    let k_sigma = p.k_sigma.eval(fc_hz);
    let k_factor_db = if k_sigma > 0.0 {
        Normal::new(p.k_mu.eval(fc_hz), k_sigma).unwrap().sample(rng)
    } else {
        p.k_mu.eval(fc_hz)
    };
    LargeScaleParams {
        delay_spread_s,
        asa_deg,
        asd_deg,
        zsa_deg,
        zsd_deg,
        k_factor_db,
        r_tau: p.r_tau,
        zeta_db: p.zeta,
        c_asa: p.c_asa,
        c_asd: p.c_asd,
        c_zsa: p.c_zsa,
        c_zsd: p.c_zsd,
    }
}

/// Exponentially distributed cluster delays, sorted and normalized so that
/// the first cluster arrives at zero. In LoS the K-factor delay scaling
/// divisor is applied after normalization.
pub fn generate_cluster_delays(
    lsp: &LargeScaleParams,
    n: usize,
    state: ChannelState,
    table: &ParamTable,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut delays: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            -lsp.r_tau * lsp.delay_spread_s * x.ln()
        })
        .collect();
    delays.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = delays[0];
    for d in delays.iter_mut() {
        *d -= min;
    }
    if state == ChannelState::Los {
        let c_tau = table.k_delay_scaling(lsp.k_factor_db).max(f64::MIN_POSITIVE);
        for d in delays.iter_mut() {
            *d /= c_tau;
        }
    }
    delays
}

/// Cluster powers. `powers` includes the LoS specular rewrite and always
/// sums to 1; `scatter_powers` is the normalized exponential profile before
/// the rewrite (identical to `powers` outside LoS) and feeds the scattered
/// ray amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPowers {
    pub powers: Vec<f64>,
    pub scatter_powers: Vec<f64>,
}

pub fn generate_cluster_powers(
    delays: &[f64],
    lsp: &LargeScaleParams,
    state: ChannelState,
    rng: &mut impl Rng,
) -> ClusterPowers {
    let mut scatter: Vec<f64> = delays
        .iter()
        .map(|&tau| {
            let shadow_db: f64 = if lsp.zeta_db > 0.0 {
                Normal::new(0.0, lsp.zeta_db).unwrap().sample(rng)
            } else {
                0.0
            };
            (-tau * (lsp.r_tau - 1.0) / (lsp.r_tau * lsp.delay_spread_s)).exp()
                * 10f64.powf(-shadow_db / 10.0)
        })
        .collect();
    let total: f64 = scatter.iter().sum();
    for p in scatter.iter_mut() {
        *p /= total;
    }
    let powers = if state == ChannelState::Los {
        let k_lin = 10f64.powf(lsp.k_factor_db / 10.0);
        let mut powers: Vec<f64> = scatter.iter().map(|p| p / (k_lin + 1.0)).collect();
        powers[0] += k_lin / (k_lin + 1.0);
        powers
    } else {
        scatter.clone()
    };
    ClusterPowers { powers, scatter_powers: scatter }
}

/// Departure/arrival direction pair of one ray, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayAngles {
    pub aod_az: f64,
    pub aod_zen: f64,
    pub aoa_az: f64,
    pub aoa_zen: f64,
}

/// Geometric line-of-sight directions of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub los: RayAngles,
    pub d3d: f64,
}

/// Departure angles seen from the gNB, arrival angles seen from the UE
/// (pointing back toward the gNB).
pub fn link_geometry(gnb: &Point3, ue: &Point3) -> LinkGeometry {
    let dx = ue.x - gnb.x;
    let dy = ue.y - gnb.y;
    let dz = ue.z - gnb.z;
    let d3d = (dx * dx + dy * dy + dz * dz).sqrt().max(f64::MIN_POSITIVE);
    LinkGeometry {
        los: RayAngles {
            aod_az: dy.atan2(dx).to_degrees(),
            aod_zen: (dz / d3d).clamp(-1.0, 1.0).acos().to_degrees(),
            aoa_az: (-dy).atan2(-dx).to_degrees(),
            aoa_zen: (-dz / d3d).clamp(-1.0, 1.0).acos().to_degrees(),
        },
        d3d,
    }
}

/// Wraps an azimuth into (-180, 180].
pub fn wrap_azimuth_deg(az: f64) -> f64 {
    let mut a = az.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Reflects a zenith angle into [0, 180].
pub fn reflect_zenith_deg(zen: f64) -> f64 {
    let mut z = zen.rem_euclid(360.0);
    if z > 180.0 {
        z = 360.0 - z;
    }
    z
}

/// The intra-cluster ray offsets used for `m` rays per cluster: the `m`
/// table entries of smallest magnitude, or the single main path for m = 1.
pub fn ray_offsets(table: &ParamTable, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    table.ray_offsets.iter().take(m).copied().collect()
}

/// Cluster mean angles via the inverse-Gaussian azimuth mapping and the
/// Laplacian zenith mapping, recentered on the geometric directions, with
/// per-ray intra-cluster offsets.
#[allow(clippy::too_many_arguments)]
pub fn generate_angles(
    powers: &[f64],
    lsp: &LargeScaleParams,
    geom: &LinkGeometry,
    m: usize,
    table: &ParamTable,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<RayAngles>>> {
    let n = powers.len();
    let c_phi = table.c_phi(n)?;
    let c_theta = table.c_theta(n)?;
    let offsets = ray_offsets(table, m);
    let max_power = powers.iter().cloned().fold(f64::MIN, f64::max);

    let mut clusters = Vec::with_capacity(n);
    for &p in powers {
        let ratio = (p / max_power).clamp(f64::MIN_POSITIVE, 1.0);
        let az_mag = 2.0 * (lsp.asa_deg / 1.4) * (-ratio.ln()).sqrt() / c_phi;
        let az_mag_dep = 2.0 * (lsp.asd_deg / 1.4) * (-ratio.ln()).sqrt() / c_phi;
        let zen_mag = -(lsp.zsa_deg / c_theta) * ratio.ln();
        let zen_mag_dep = -(lsp.zsd_deg / c_theta) * ratio.ln();

        let mut centered = |magnitude: f64, sigma: f64, center: f64| -> f64 {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let perturb: f64 = if sigma > 0.0 {
                Normal::new(0.0, sigma).unwrap().sample(rng)
            } else {
                0.0
            };
            sign * magnitude + perturb + center
        };
        let aoa_az = centered(az_mag, lsp.asa_deg / 7.0, geom.los.aoa_az);
        let aod_az = centered(az_mag_dep, lsp.asd_deg / 7.0, geom.los.aod_az);
        let aoa_zen = centered(zen_mag, lsp.zsa_deg / 7.0, geom.los.aoa_zen);
        let aod_zen = centered(zen_mag_dep, lsp.zsd_deg / 7.0, geom.los.aod_zen);

        let rays: Vec<RayAngles> = offsets
            .iter()
            .map(|&alpha| RayAngles {
                aod_az: wrap_azimuth_deg(aod_az + lsp.c_asd * alpha),
                aod_zen: reflect_zenith_deg(aod_zen + lsp.c_zsd * alpha),
                aoa_az: wrap_azimuth_deg(aoa_az + lsp.c_asa * alpha),
                aoa_zen: reflect_zenith_deg(aoa_zen + lsp.c_zsa * alpha),
            })
            .collect();
        clusters.push(rays);
    }
    Ok(clusters)
}

/// Permutes arrival ray indices uniformly at random within each cluster;
/// departure angles stay put.
pub fn couple_rays(clusters: &mut [Vec<RayAngles>], rng: &mut impl Rng) {
    for rays in clusters.iter_mut() {
        let m = rays.len();
        let mut perm: Vec<usize> = (0..m).collect();
        for i in 0..m.saturating_sub(1) {
            let j = i + rng.random_range(0..(m - i));
            perm.swap(i, j);
        }
        let arrivals: Vec<(f64, f64)> = rays.iter().map(|r| (r.aoa_az, r.aoa_zen)).collect();
        for (ray, &src) in rays.iter_mut().zip(perm.iter()) {
            ray.aoa_az = arrivals[src].0;
            ray.aoa_zen = arrivals[src].1;
        }
    }
}

/// Uniform initial phases in (-pi, pi], one per ray.
pub fn draw_initial_phases(n: usize, m: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| (rng.random::<f64>() - 0.5) * 2.0 * std::f64::consts::PI)
                .collect()
        })
        .collect()
}

/// Complete small-scale realization of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub delays_s: Vec<f64>,
    /// Normalized cluster powers (LoS specular rewrite included, sum = 1).
    pub powers: Vec<f64>,
    /// Normalized scattered-only powers (sum = 1), used for ray amplitudes.
    pub scatter_powers: Vec<f64>,
    /// Per-cluster rays, arrival angles already coupled.
    pub rays: Vec<Vec<RayAngles>>,
    pub initial_phases: Vec<Vec<f64>>,
    pub los_direction: RayAngles,
    pub k_factor_db: f64,
}

pub fn generate_cluster_set(
    geom: &LinkGeometry,
    state: ChannelState,
    simp: &SimplificationConfig,
    lsp: &LargeScaleParams,
    table: &ParamTable,
    delays_rng: &mut impl Rng,
    powers_rng: &mut impl Rng,
    angles_rng: &mut impl Rng,
    coupling_rng: &mut impl Rng,
    phases_rng: &mut impl Rng,
) -> Result<ClusterSet> {
    let n = simp.clusters_for(state);
    let m = simp.m_rays;
    let delays = generate_cluster_delays(lsp, n, state, table, delays_rng);
    let powers = generate_cluster_powers(&delays, lsp, state, powers_rng);
    let mut rays = generate_angles(&powers.powers, lsp, geom, m, table, angles_rng)?;
    couple_rays(&mut rays, coupling_rng);
    let initial_phases = draw_initial_phases(n, m, phases_rng);
    Ok(ClusterSet {
        delays_s: delays,
        powers: powers.powers,
        scatter_powers: powers.scatter_powers,
        rays,
        initial_phases,
        los_direction: geom.los,
        k_factor_db: lsp.k_factor_db,
    })
}

/// Per-link cluster delay line: one complex matrix per cluster, indexed
/// (tx_element, rx_element), plus the cluster delays.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub matrices: Vec<DMatrix<Complex64>>,
    pub delays_s: Vec<f64>,
    pub gnb_id: u32,
    pub ue_id: u32,
    pub state: ChannelState,
    pub simplification: SimplificationConfig,
}

impl ChannelRealization {
    /// Narrowband collapse at f = 0: the sum of the cluster matrices.
    pub fn narrowband(&self) -> DMatrix<Complex64> {
        let mut sum = DMatrix::zeros(self.matrices[0].nrows(), self.matrices[0].ncols());
        for m in &self.matrices {
            sum += m;
        }
        sum
    }

    pub fn tx_elements(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn rx_elements(&self) -> usize {
        self.matrices[0].ncols()
    }
}

/// Combines rays into the per-cluster channel matrices. This is the
/// steering-vector hot path: cost scales with N * M * (S + U + S*U).
#[allow(clippy::too_many_arguments)]
pub fn generate_channel_matrices(
    cluster_set: &ClusterSet,
    tx_array: &AntennaArray,
    rx_array: &AntennaArray,
    wavelength: f64,
    ue_velocity: [f64; 3],
    time_s: f64,
    state: ChannelState,
) -> Vec<DMatrix<Complex64>> {
    let n_tx = tx_array.num_elements();
    let n_rx = rx_array.num_elements();
    let m = cluster_set.rays.first().map_or(0, |r| r.len()) as f64;
    let k_lin = 10f64.powf(cluster_set.k_factor_db / 10.0);
    let moving = ue_velocity != [0.0; 3];

    let mut a_tx: Vec<Complex64> = Vec::new();
    let mut a_rx: Vec<Complex64> = Vec::new();
    let mut matrices = Vec::with_capacity(cluster_set.rays.len());

    for (n, rays) in cluster_set.rays.iter().enumerate() {
        let mut data = vec![Complex64::new(0.0, 0.0); n_tx * n_rx];
        let scatter_power = cluster_set.scatter_powers[n];
        let amp = if state == ChannelState::Los {
            (scatter_power / (k_lin + 1.0) / m).sqrt()
        } else {
            (scatter_power / m).sqrt()
        };
        for (ray, &phase) in rays.iter().zip(&cluster_set.initial_phases[n]) {
            let mut total_phase = phase;
            if moving || time_s != 0.0 {
                let dir = direction_unit_vector(ray.aoa_az, ray.aoa_zen);
                let doppler_hz = (dir[0] * ue_velocity[0]
                    + dir[1] * ue_velocity[1]
                    + dir[2] * ue_velocity[2])
                    / wavelength;
                total_phase += 2.0 * std::f64::consts::PI * doppler_hz * time_s;
            }
            let coeff = Complex64::from_polar(amp, total_phase);
            accumulate_ray(
                &mut data, tx_array, rx_array, ray.aod_az, ray.aod_zen, ray.aoa_az,
                ray.aoa_zen, wavelength, coeff, &mut a_tx, &mut a_rx,
            );
        }
        if n == 0 && state == ChannelState::Los {
            let los = &cluster_set.los_direction;
            let mut total_phase = 0.0;
            if moving || time_s != 0.0 {
                let dir = direction_unit_vector(los.aoa_az, los.aoa_zen);
                let doppler_hz = (dir[0] * ue_velocity[0]
                    + dir[1] * ue_velocity[1]
                    + dir[2] * ue_velocity[2])
                    / wavelength;
                total_phase = 2.0 * std::f64::consts::PI * doppler_hz * time_s;
            }
            let coeff = Complex64::from_polar((k_lin / (k_lin + 1.0)).sqrt(), total_phase);
            accumulate_ray(
                &mut data, tx_array, rx_array, los.aod_az, los.aod_zen, los.aoa_az,
                los.aoa_zen, wavelength, coeff, &mut a_tx, &mut a_rx,
            );
        }
        matrices.push(DMatrix::from_vec(n_tx, n_rx, data));
    }
    matrices
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn accumulate_ray(
    data: &mut [Complex64],
    tx_array: &AntennaArray,
    rx_array: &AntennaArray,
    aod_az: f64,
    aod_zen: f64,
    aoa_az: f64,
    aoa_zen: f64,
    wavelength: f64,
    coeff: Complex64,
    a_tx: &mut Vec<Complex64>,
    a_rx: &mut Vec<Complex64>,
) {
    let n_tx = tx_array.num_elements();
    steering_vector_into(tx_array, aod_az, aod_zen, wavelength, a_tx);
    steering_vector_into(rx_array, aoa_az, aoa_zen, wavelength, a_rx);
    // Column-major accumulation of coeff * a_tx (outer) a_rx.
    for (u, &rx) in a_rx.iter().enumerate() {
        let c = coeff * rx;
        let col = &mut data[u * n_tx..(u + 1) * n_tx];
        for (slot, &tx) in col.iter_mut().zip(a_tx.iter()) {
            *slot += c * tx;
        }
    }
}

/// Beamformed channel frequency response on a frequency grid:
/// H(f) = sum_n (w_tx^T H_n w_rx) exp(-j 2 pi f tau_n).
pub fn frequency_response(
    realization: &ChannelRealization,
    tx_weights: &[Complex64],
    rx_weights: &[Complex64],
    freq_grid_hz: &[f64],
) -> Result<Vec<Complex64>> {
    if tx_weights.len() != realization.tx_elements()
        || rx_weights.len() != realization.rx_elements()
    {
        return Err(SimError::contract(format!(
            "weight lengths ({}, {}) do not match array sizes ({}, {})",
            tx_weights.len(),
            rx_weights.len(),
            realization.tx_elements(),
            realization.rx_elements()
        )));
    }
    let gains: Vec<Complex64> = realization
        .matrices
        .iter()
        .map(|h| bilinear_form(tx_weights, h, rx_weights))
        .collect();
    Ok(freq_grid_hz
        .iter()
        .map(|&f| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (gain, &tau) in gains.iter().zip(&realization.delays_s) {
                acc += gain * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau);
            }
            acc
        })
        .collect())
}

/// w_tx^T H w_rx (plain transpose, no conjugation).
pub fn bilinear_form(
    tx_weights: &[Complex64],
    h: &DMatrix<Complex64>,
    rx_weights: &[Complex64],
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, &rx) in rx_weights.iter().enumerate() {
        let mut col_acc = Complex64::new(0.0, 0.0);
        for (s, &tx) in tx_weights.iter().enumerate() {
            col_acc += tx * h[(s, u)];
        }
        acc += col_acc * rx;
    }
    acc
}

/// Centered baseband subcarrier grid: bandwidth / spacing points.
pub fn subcarrier_grid(bandwidth_hz: f64, spacing_hz: f64) -> Vec<f64> {
    let n = (bandwidth_hz / spacing_hz).round() as usize;
    (0..n)
        .map(|k| (k as f64 - (n as f64 - 1.0) / 2.0) * spacing_hz)
        .collect()
}

/// Generates the full realization of one link from named sub-streams, with
/// phase timing instrumentation.
#[allow(clippy::too_many_arguments)]
pub fn generate_link_realization(
    geom: &LinkGeometry,
    state: ChannelState,
    gnb_id: u32,
    ue_id: u32,
    simp: &SimplificationConfig,
    table: &ParamTable,
    fc_hz: f64,
    tx_array: &AntennaArray,
    rx_array: &AntennaArray,
    tree: &SeedTree,
    timer: &mut PhaseTimer,
) -> Result<ChannelRealization> {
    let wavelength = crate::scenario::SPEED_OF_LIGHT / fc_hz;
    let n = simp.clusters_for(state);
    let m = simp.m_rays;

    let lsp = timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::LargeScale);
        draw_large_scale_params(state, fc_hz, table, &mut rng)
    });
    let delays = timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::ClusterDelays);
        generate_cluster_delays(&lsp, n, state, table, &mut rng)
    });
    let powers = timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::ClusterPowers);
        generate_cluster_powers(&delays, &lsp, state, &mut rng)
    });
    let mut rays = timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::Angles);
        generate_angles(&powers.powers, &lsp, geom, m, table, &mut rng)
    })?;
    timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::RayCoupling);
        couple_rays(&mut rays, &mut rng);
    });
    let initial_phases = timer.random_variables(|| {
        let mut rng = tree.link_stream(gnb_id, ue_id, Phase::InitialPhases);
        draw_initial_phases(n, m, &mut rng)
    });

    let cluster_set = ClusterSet {
        delays_s: delays,
        powers: powers.powers,
        scatter_powers: powers.scatter_powers,
        rays,
        initial_phases,
        los_direction: geom.los,
        k_factor_db: lsp.k_factor_db,
    };

    let matrices = timer.computations(|| {
        generate_channel_matrices(
            &cluster_set,
            tx_array,
            rx_array,
            wavelength,
            [0.0; 3],
            0.0,
            state,
        )
    });

    Ok(ChannelRealization {
        matrices,
        delays_s: cluster_set.delays_s,
        gnb_id,
        ue_id,
        state,
        simplification: *simp,
    })
}
